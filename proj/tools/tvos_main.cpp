// Command-line surface for the transductive tracking engine: synthetic data
// generation, propagation, the generic graph solver, embedding training,
// flow readout, evaluation, and the sampling-strategy ablation table.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "tvos/embedding.hpp"
#include "tvos/flow.hpp"
#include "tvos/graph_transduction.hpp"
#include "tvos/metrics.hpp"
#include "tvos/netpbm.hpp"
#include "tvos/propagation.hpp"
#include "tvos/run_config.hpp"
#include "tvos/synth.hpp"
#include "tvos/training.hpp"

namespace fs = std::filesystem;
using namespace tvos;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitNotConverged = 3;

std::vector<std::string> list_files(const std::string& dir, const std::string& ext) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir + ": not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ext) names.push_back(entry.path().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw std::runtime_error(dir + ": no " + ext + " files found");
    return names;
}

class DirectoryFrames final : public FrameSource {
public:
    explicit DirectoryFrames(const std::string& dir) : paths_(list_files(dir, ".ppm")) {}
    int size() const override { return static_cast<int>(paths_.size()); }
    ImageU8 frame(int index) const override { return read_ppm(paths_.at(index)); }

private:
    std::vector<std::string> paths_;
};

void add_run_config_flags(CLI::App* cmd, RunConfig& cfg, bool with_strategy = true) {
    if (with_strategy)
        cmd->add_option("--strategy", cfg.strategy,
                        "prev1 | consec:N | uniform:N:W | sparse-dense[:D:S:W] (+motion, +first)");
    cmd->add_option("--sigma-local", cfg.sigma_local, "locality sigma for recent references");
    cmd->add_option("--sigma-distant", cfg.sigma_distant, "locality sigma for distant references");
    cmd->add_option("--sigma-units", cfg.sigma_units, "cells | pixels");
    cmd->add_option("--temperature", cfg.temperature, "appearance sharpness divisor");
    cmd->add_option("--stride", cfg.stride, "feature grid stride in pixels");
    cmd->add_option("--window-radius", cfg.window_radius, "truncate pairs beyond this cell radius");
    cmd->add_flag("--harden-history", cfg.harden_history, "store argmaxed fields in the history bank");
}

std::shared_ptr<const EmbeddingProvider> build_provider(const std::string& embeddings_path,
                                                        const std::string& head_path, int stride) {
    std::shared_ptr<const EmbeddingProvider> provider;
    if (!embeddings_path.empty())
        provider = std::make_shared<FileProvider>(FileProvider::from_file(embeddings_path, stride));
    else
        provider = std::make_shared<HandcraftedProvider>();
    if (!head_path.empty())
        provider = std::make_shared<ProjectedProvider>(provider, ProjectionHead::load(head_path));
    return provider;
}

Eigen::MatrixXd read_text_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!ls.eof()) throw std::runtime_error(path + ": malformed matrix row '" + line + "'");
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": empty matrix");
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::runtime_error(path + ": ragged matrix row " + std::to_string(i));
        for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

LabelMatrix read_labels(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open");
    std::vector<std::pair<int, int>> entries;
    int max_class = 0;
    int idx, cls;
    while (in >> idx >> cls) {
        if (idx < 0 || idx >= n)
            throw std::runtime_error(path + ": node index " + std::to_string(idx) + " out of range");
        if (cls < 0) throw std::runtime_error(path + ": negative class id");
        entries.emplace_back(idx, cls);
        max_class = std::max(max_class, cls);
    }
    if (!in.eof()) throw std::runtime_error(path + ": malformed 'index class' line");
    if (entries.empty()) throw std::runtime_error(path + ": no labels");
    LabelMatrix y0 = LabelMatrix::Zero(n, max_class + 1);
    for (const auto& [i, c] : entries) {
        y0.row(i).setZero();
        y0(i, c) = 1.0;
    }
    return y0;
}

void write_text_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.precision(12);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
        out << "\n";
    }
}

std::vector<std::string> corpus_sequence_dirs(const std::string& corpus) {
    if (fs::is_directory(fs::path(corpus) / "frames") && fs::is_directory(fs::path(corpus) / "gt"))
        return {corpus};
    std::vector<std::string> dirs;
    if (!fs::is_directory(corpus)) throw std::runtime_error(corpus + ": not a directory");
    for (const auto& entry : fs::directory_iterator(corpus))
        if (entry.is_directory() && fs::is_directory(entry.path() / "frames") &&
            fs::is_directory(entry.path() / "gt"))
            dirs.push_back(entry.path().string());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty())
        throw std::runtime_error(corpus + ": no sequence directories (need frames/ and gt/)");
    return dirs;
}

struct LoadedSequence {
    std::vector<ImageU8> frames;
    std::vector<MaskU8> gt;
};

LoadedSequence load_sequence(const std::string& dir) {
    LoadedSequence seq;
    for (const std::string& p : list_files((fs::path(dir) / "frames").string(), ".ppm"))
        seq.frames.push_back(read_ppm(p));
    for (const std::string& p : list_files((fs::path(dir) / "gt").string(), ".pgm"))
        seq.gt.push_back(read_pgm(p));
    if (seq.frames.size() != seq.gt.size())
        throw std::runtime_error(dir + ": frame/annotation count mismatch");
    return seq;
}

void write_masks(const std::string& dir, const std::vector<MaskU8>& masks) {
    fs::create_directories(dir);
    char name[32];
    for (size_t t = 0; t < masks.size(); ++t) {
        std::snprintf(name, sizeof(name), "%05zu.pgm", t);
        write_pgm((fs::path(dir) / name).string(), masks[t]);
    }
}

int run_propagate(const std::string& frames_dir, const std::string& first_mask_path,
                  const std::string& out_dir, const std::string& embeddings_path,
                  const std::string& head_path, const std::string& dump_fields,
                  const RunConfig& run_cfg) {
    const DirectoryFrames frames(frames_dir);
    const MaskU8 first_mask = read_pgm(first_mask_path);
    const PropagationConfig cfg = run_cfg.to_propagation_config();
    const auto provider = build_provider(embeddings_path, head_path, cfg.stride);

    const SequenceResult result = run_sequence(frames, first_mask, cfg, *provider);
    write_masks(out_dir, result.masks);

    if (!dump_fields.empty()) {
        Emb1Data dump;
        dump.frames = static_cast<uint32_t>(result.fields.size());
        dump.h = static_cast<uint32_t>(result.fields[0].h);
        dump.w = static_cast<uint32_t>(result.fields[0].w);
        dump.c = static_cast<uint32_t>(result.fields[0].classes);
        dump.values.reserve(dump.frames * dump.frame_size());
        for (const LabelField& f : result.fields)
            for (double v : f.probs) dump.values.push_back(static_cast<float>(v));
        write_emb1(dump_fields, dump);
    }
    std::cout << "wrote " << result.masks.size() << " masks to " << out_dir << "\n";
    return kExitOk;
}

int run_solve(const std::string& weights_path, const std::string& labels_path,
              const std::string& out_path, double alpha, double tol, int max_iters,
              bool closed_form) {
    const AffinityMatrix w = AffinityMatrix::from_dense(read_text_matrix(weights_path));
    const LabelMatrix y0 = read_labels(labels_path, w.n());

    if (closed_form) {
        write_text_matrix(out_path, solve_closed_form(w, y0, alpha));
        return kExitOk;
    }
    const SolveResult res = solve_iterative(w, y0, TransductionParams::from_alpha(alpha, tol, max_iters));
    write_text_matrix(out_path, res.y);
    std::cout << "iterations: " << res.iterations << (res.converged ? " (converged)" : " (max iters)")
              << "\n";
    if (!res.converged) {
        std::cerr << "warning: iteration did not converge within " << max_iters << " steps\n";
        return kExitNotConverged;
    }
    return kExitOk;
}

int run_ablate(const std::string& corpus, const std::string& json_out, const std::string& head_path,
               RunConfig run_cfg) {
    const std::vector<std::string> dirs = corpus_sequence_dirs(corpus);
    const std::vector<AblationEntry> grid = ablation_grid();
    const auto provider = build_provider("", head_path, run_cfg.stride);

    std::vector<std::vector<double>> table(dirs.size(), std::vector<double>(grid.size(), 0.0));
    for (size_t si = 0; si < dirs.size(); ++si) {
        const LoadedSequence seq = load_sequence(dirs[si]);
        const MemoryFrames frames(seq.frames);
        for (size_t gi = 0; gi < grid.size(); ++gi) {
            run_cfg.strategy = format_strategy(grid[gi].strategy);
            const PropagationConfig cfg = run_cfg.to_propagation_config();
            const SequenceResult result = run_sequence(frames, seq.gt[0], cfg, *provider);
            table[si][gi] = evaluate_masks(result.masks, seq.gt).j_mean;
        }
    }

    std::cout << "sequence";
    for (const AblationEntry& e : grid) std::cout << "\t" << e.tag;
    std::cout << "\n";
    std::vector<double> mean(grid.size(), 0.0);
    for (size_t si = 0; si < dirs.size(); ++si) {
        std::cout << fs::path(dirs[si]).filename().string();
        for (size_t gi = 0; gi < grid.size(); ++gi) {
            std::cout << "\t" << std::fixed << std::setprecision(4) << table[si][gi];
            mean[gi] += table[si][gi];
        }
        std::cout << "\n";
    }
    std::cout << "mean";
    for (size_t gi = 0; gi < grid.size(); ++gi)
        std::cout << "\t" << std::fixed << std::setprecision(4) << mean[gi] / dirs.size();
    std::cout << "\n";

    if (!json_out.empty()) {
        std::ofstream out(json_out);
        if (!out) throw std::runtime_error(json_out + ": cannot open for writing");
        out << "{\n  \"strategies\": [";
        for (size_t gi = 0; gi < grid.size(); ++gi)
            out << (gi ? ", " : "") << "\"" << grid[gi].tag << "\"";
        out << "],\n  \"mean_j\": [";
        for (size_t gi = 0; gi < grid.size(); ++gi)
            out << (gi ? ", " : "") << mean[gi] / dirs.size();
        out << "]\n}\n";
    }
    return kExitOk;
}

int run_train(const std::string& corpus, const std::string& out_head, int epochs, double lr,
              int snippet, const std::string& tag, double temperature, uint32_t seed, int c_out,
              const std::string& init_head_path, int stride) {
    std::vector<TrainingSequence> sequences;
    const HandcraftedProvider base;
    for (const std::string& dir : corpus_sequence_dirs(corpus)) {
        const LoadedSequence loaded = load_sequence(dir);
        TrainingSequence seq;
        int classes = 0;
        for (const MaskU8& m : loaded.gt) classes = std::max(classes, max_label(m) + 1);
        for (size_t t = 0; t < loaded.frames.size(); ++t) {
            seq.base_features.push_back(base.embed(loaded.frames[t], static_cast<int>(t), stride));
            seq.gt_fields.push_back(init_from_annotation(loaded.gt[t], stride, classes));
        }
        sequences.push_back(std::move(seq));
    }

    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.epochs = epochs;
    cfg.snippet_length = snippet;
    cfg.strategy_tag = tag;
    cfg.temperature = temperature;
    cfg.seed = seed;

    const ProjectionHead init = init_head_path.empty()
                                    ? ProjectionHead::random(base.channels(), c_out, seed)
                                    : ProjectionHead::load(init_head_path);
    const TrainResult result = train_head(sequences, init, cfg);
    result.head.save(out_head);

    for (size_t e = 0; e < result.epoch_loss.size(); ++e)
        std::cout << "epoch " << e << " loss " << result.epoch_loss[e] << "\n";
    std::cout << "saved head to " << out_head << "\n";
    return kExitOk;
}

int run_flow(const std::string& frame_t_path, const std::string& frame_t1_path,
             const std::string& out_path, const std::string& color_path, bool no_spatial,
             const std::string& head_path, const RunConfig& run_cfg) {
    const PropagationConfig cfg = run_cfg.to_propagation_config();
    const auto provider = build_provider("", head_path, cfg.stride);
    const FeatureGrid a = provider->embed(read_ppm(frame_t_path), 0, cfg.stride);
    const FeatureGrid b = provider->embed(read_ppm(frame_t1_path), 1, cfg.stride);
    const DisplacementField field = displacement_field(a, b, cfg.spatial, !no_spatial);
    write_flow_text(out_path, field);
    if (!color_path.empty()) write_ppm(color_path, flow_to_color(field));
    return kExitOk;
}

int run_synth(const std::string& preset_name, int frames, const std::string& size, uint32_t seed,
              const std::string& out_dir) {
    ScenePreset preset;
    preset.kind = ScenePreset::parse_kind(preset_name);
    preset.frames = frames;
    preset.seed = seed;
    const size_t x = size.find('x');
    if (x == std::string::npos)
        throw std::invalid_argument("--size must look like WxH, got '" + size + "'");
    preset.width = std::stoi(size.substr(0, x));
    preset.height = std::stoi(size.substr(x + 1));

    const SynthResult result = generate(preset);
    save_synth(result, out_dir);
    std::cout << "wrote " << result.frames.size() << " frames to " << out_dir << "\n";
    return kExitOk;
}

int run_eval(const std::string& pred_dir, const std::string& gt_dir, bool include_first,
             const std::string& out_path, const std::string& series_path) {
    const EvalReport report = evaluate_sequence(pred_dir, gt_dir, !include_first);
    const std::string doc = report_json(report);
    if (out_path.empty()) {
        std::cout << doc << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error(out_path + ": cannot open for writing");
        out << doc << "\n";
    }
    if (!series_path.empty()) {
        std::ofstream out(series_path);
        if (!out) throw std::runtime_error(series_path + ": cannot open for writing");
        out << per_frame_series(report);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transductive label propagation for video object segmentation"};
    app.require_subcommand(1);

    int exit_code = kExitOk;

    // propagate
    auto* propagate = app.add_subcommand("propagate", "track a sequence from its first-frame mask");
    std::string frames_dir, first_mask, out_dir, embeddings, head, dump_fields;
    RunConfig propagate_cfg;
    propagate->add_option("--frames", frames_dir, "directory of PPM frames")->required();
    propagate->add_option("--first-mask", first_mask, "PGM annotation for frame 0")->required();
    propagate->add_option("--out", out_dir, "output directory for PGM masks")->required();
    propagate->add_option("--embeddings", embeddings, "EMB1 file with precomputed features");
    propagate->add_option("--head", head, "projection head file (TVOSHEAD)");
    propagate->add_option("--dump-fields", dump_fields, "write per-frame soft fields (EMB1)");
    add_run_config_flags(propagate, propagate_cfg);
    propagate->callback([&] {
        exit_code = run_propagate(frames_dir, first_mask, out_dir, embeddings, head, dump_fields,
                                  propagate_cfg);
    });

    // solve
    auto* solve = app.add_subcommand("solve", "generic dense graph transduction solver");
    std::string weights_path, labels_path, solve_out;
    double alpha = 0.99, tol = 1e-10;
    int max_iters = 10000;
    bool closed_form = false;
    solve->add_option("--weights", weights_path, "text file with the affinity matrix")->required();
    solve->add_option("--labels", labels_path, "text file of 'index class' lines")->required();
    solve->add_option("--out", solve_out, "output label matrix (text)")->required();
    solve->add_option("--alpha", alpha, "smoothing weight in [0,1)");
    solve->add_option("--tol", tol, "max-abs update convergence threshold");
    solve->add_option("--max-iters", max_iters, "iteration cap");
    solve->add_flag("--closed-form", closed_form, "solve the linear system instead of iterating");
    solve->callback([&] {
        exit_code = run_solve(weights_path, labels_path, solve_out, alpha, tol, max_iters, closed_form);
    });

    // train-embed
    auto* train = app.add_subcommand("train-embed", "fit the projection head on an annotated corpus");
    std::string corpus, out_head, init_head, train_tag = "9frames";
    int epochs = 50, snippet = 10, c_out = 16, train_stride = 8;
    double lr = 0.05, train_temp = 0.1;
    uint32_t train_seed = 1;
    train->add_option("--corpus", corpus, "directory of sequences (frames/ + gt/)")->required();
    train->add_option("--out-head", out_head, "output head file")->required();
    train->add_option("--epochs", epochs);
    train->add_option("--lr", lr);
    train->add_option("--snippet", snippet, "training snippet length");
    train->add_option("--strategy", train_tag, "1frame | 3frames | 9frames | uniform | sparse");
    train->add_option("--temperature", train_temp);
    train->add_option("--seed", train_seed);
    train->add_option("--c-out", c_out, "embedding dimension");
    train->add_option("--init-head", init_head, "starting head (default: seeded random)");
    train->add_option("--stride", train_stride);
    train->callback([&] {
        exit_code = run_train(corpus, out_head, epochs, lr, snippet, train_tag, train_temp,
                              train_seed, c_out, init_head, train_stride);
    });

    // eval
    auto* eval = app.add_subcommand("eval", "J/F/G evaluation of predicted masks");
    std::string pred_dir, gt_dir, eval_out, series_out;
    bool include_first = false;
    eval->add_option("--pred", pred_dir, "directory of predicted PGM masks")->required();
    eval->add_option("--gt", gt_dir, "directory of ground-truth PGM masks")->required();
    eval->add_option("--out", eval_out, "write the JSON report here instead of stdout");
    eval->add_option("--series", series_out, "write the per-frame IoU table here");
    eval->add_flag("--include-first", include_first, "also score frame 0");
    eval->callback([&] { exit_code = run_eval(pred_dir, gt_dir, include_first, eval_out, series_out); });

    // flow
    auto* flow = app.add_subcommand("flow", "expected-displacement readout between two frames");
    std::string frame_t, frame_t1, flow_out, flow_color, flow_head;
    bool no_spatial = false;
    RunConfig flow_cfg;
    flow->add_option("--frame-t", frame_t, "earlier frame (PPM)")->required();
    flow->add_option("--frame-t1", frame_t1, "later frame (PPM)")->required();
    flow->add_option("--out", flow_out, "output text field")->required();
    flow->add_option("--color", flow_color, "optional color-wheel PPM rendering");
    flow->add_option("--head", flow_head, "projection head file");
    flow->add_flag("--no-spatial", no_spatial, "appearance-only weights");
    add_run_config_flags(flow, flow_cfg, /*with_strategy=*/false);
    flow->callback([&] {
        exit_code = run_flow(frame_t, frame_t1, flow_out, flow_color, no_spatial, flow_head, flow_cfg);
    });

    // synth
    auto* synth = app.add_subcommand("synth", "generate an annotated synthetic sequence");
    std::string preset_name = "translation", synth_size = "64x64", synth_out;
    int synth_frames = 40;
    uint32_t synth_seed = 0;
    synth->add_option("--preset", preset_name,
                      "translation | two_object_crossing | occlusion_reappear | deform");
    synth->add_option("--frames", synth_frames);
    synth->add_option("--size", synth_size, "WxH");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->callback([&] {
        exit_code = run_synth(preset_name, synth_frames, synth_size, synth_seed, synth_out);
    });

    // ablate
    auto* ablate = app.add_subcommand("ablate", "J table over the six tracking strategies");
    std::string ablate_corpus, ablate_json, ablate_head;
    RunConfig ablate_cfg;
    ablate->add_option("--corpus", ablate_corpus, "directory of sequences (frames/ + gt/)")->required();
    ablate->add_option("--json", ablate_json, "also write the mean row as JSON");
    ablate->add_option("--head", ablate_head, "projection head file");
    add_run_config_flags(ablate, ablate_cfg, /*with_strategy=*/false);
    ablate->callback([&] { exit_code = run_ablate(ablate_corpus, ablate_json, ablate_head, ablate_cfg); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return exit_code;
}
