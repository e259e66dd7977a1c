#pragma once

// Batch front end: `qqe transform`, `qqe embed`, `qqe metrics`.
// Exit codes: 0 ok, 2 usage/validation error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qqe/qqe.hpp"

namespace qqe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Hex SHA-256 of a file's bytes.
inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof(buf));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

namespace detail {

struct TransformArgs {
    std::string input;
    std::vector<std::string> reference;
    std::vector<std::string> ref_dist;
    std::vector<std::string> ref_cdf;
    std::string mode = "exact";
    bool supervised = false;
    double lambda = 0.1;
    double eta = 0.01;
    int k = 10;
    int max_iters = 500;
    int snapshot_every = 1;
    int rematch_every = 0;
    double rel_tol = 1e-6;
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    bool metrics = false;
    std::string init;
};

inline void add_transform_options(CLI::App& cmd, TransformArgs& a) {
    cmd.add_option("--input", a.input, "Input CSV (one point per row, optional final 'label' column)")->required();
    cmd.add_option("--reference", a.reference,
                   "Reference sample CSV; repeat once per class (ascending label order) with --supervised");
    cmd.add_option("--ref-dist", a.ref_dist,
                   "Reference family name[:p1,p2,...]; names: uniform-rect gaussian gmm ring filled-circle s-shape "
                   "helix triangle diamond thick-square. Repeat once per class with --supervised");
    cmd.add_option("--ref-cdf", a.ref_cdf,
                   "Comma-separated list of per-dimension CDF tables, each a two-column CSV "
                   "(value,cumulative_probability). Repeat once per class with --supervised");
    cmd.add_option("--mode", a.mode, "exact | shape")->check(CLI::IsMember({"exact", "shape"}));
    cmd.add_flag("--supervised", a.supervised, "Transform each class to its own reference");
    cmd.add_option("--lambda", a.lambda, "Distance-preservation weight");
    cmd.add_option("--eta", a.eta, "Learning rate");
    cmd.add_option("--k", a.k, "Neighbors in the regularization graph");
    cmd.add_option("--max-iters", a.max_iters, "Iteration cap");
    cmd.add_option("--snapshot-every", a.snapshot_every, "Snapshot cadence in iterations");
    cmd.add_option("--rematch-every", a.rematch_every, "Re-run matching every N iterations (0 = never)");
    cmd.add_option("--rel-tol", a.rel_tol, "Relative cost change that stops the descent");
    cmd.add_option("--config", a.config, "JSON config with TransformConfig keys; explicit flags override it");
    cmd.add_option("--seed", a.seed, "Seed for every random draw");
    cmd.add_option("--out", a.out, "Run directory")->required();
    cmd.add_flag("--metrics", a.metrics, "Write metrics.json with before/after measures");
}

inline TransformConfig resolve_config(const CLI::App& cmd, const TransformArgs& a) {
    TransformConfig c;
    if (!a.config.empty()) c = io::read_config(a.config);
    if (cmd.count("--lambda")) c.lambda = a.lambda;
    if (cmd.count("--eta")) c.eta = a.eta;
    if (cmd.count("--k")) c.k = a.k;
    if (cmd.count("--mode") || a.config.empty()) c.mode = io::parse_mode(a.mode);
    if (a.supervised) c.supervised = true;
    if (cmd.count("--max-iters")) c.max_iters = a.max_iters;
    if (cmd.count("--snapshot-every")) c.snapshot_every = a.snapshot_every;
    if (cmd.count("--rematch-every")) c.rematch_every = a.rematch_every > 0 ? std::optional<int>(a.rematch_every) : std::nullopt;
    if (cmd.count("--rel-tol")) c.rel_cost_tol = a.rel_tol;
    c.validate();
    return c;
}

struct ReferenceSource {
    ReferenceSpec spec;
    nlohmann::json description;
};

inline std::vector<ReferenceSource> parse_references(const TransformArgs& a) {
    const int given = (a.reference.empty() ? 0 : 1) + (a.ref_dist.empty() ? 0 : 1) + (a.ref_cdf.empty() ? 0 : 1);
    if (given == 0) throw Error(ErrorCode::InvalidParameter, "one of --reference, --ref-dist, --ref-cdf is required");
    if (given > 1) throw Error(ErrorCode::InvalidParameter, "--reference, --ref-dist and --ref-cdf are mutually exclusive");
    std::vector<ReferenceSource> out;
    for (const auto& path : a.reference) {
        out.push_back({{EmpiricalSample{io::read_matrix(path)}, a.seed},
                       {{"kind", "sample"}, {"path", path}, {"sha256", file_digest(path)}}});
    }
    for (const auto& text : a.ref_dist) {
        out.push_back({{parse_ref_dist(text), a.seed}, {{"kind", "family"}, {"spec", text}}});
    }
    for (const auto& list : a.ref_cdf) {
        CdfTables tables;
        nlohmann::json files = nlohmann::json::array();
        std::stringstream ss(list);
        std::string path;
        while (std::getline(ss, path, ',')) {
            tables.per_dimension.push_back(io::read_cdf_table(path));
            files.push_back({{"path", path}, {"sha256", file_digest(path)}});
        }
        out.push_back({{std::move(tables), a.seed}, {{"kind", "cdf"}, {"files", files}}});
    }
    return out;
}

inline std::string snapshot_name(int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snapshot_%06d.csv", iteration);
    return buf;
}

inline nlohmann::json qq_json(const std::vector<QqLineStats>& stats) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : stats) arr.push_back({{"slope", s.slope}, {"intercept", s.intercept}, {"r2", s.r_squared}});
    return arr;
}

inline nlohmann::json two_sample_json(const Matrix& before, const Matrix& after, const Matrix& reference) {
    return {{"kl_before", kl_divergence(before, reference)},
            {"kl_after", kl_divergence(after, reference)},
            {"mmd2_before", mmd_squared(before, reference)},
            {"mmd2_after", mmd_squared(after, reference)},
            {"hsic_before", hsic(before, reference)},
            {"hsic_after", hsic(after, reference)}};
}

inline std::vector<int> recall_ks(Index n) {
    std::vector<int> ks;
    for (int k : {1, 5, 10}) {
        if (k < n) ks.push_back(k);
    }
    return ks;
}

inline nlohmann::json recall_json(const std::map<int, double>& r) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : r) j[std::to_string(k)] = v;
    return j;
}

/// Shared pipeline of `transform` and `embed` once the starting points exist.
inline int run_pipeline(const std::string& command, const CLI::App& cmd, const TransformArgs& a, const Dataset& data,
                 nlohmann::json init_info, std::ostream& out) {
    TransformConfig config = resolve_config(cmd, a);
    auto refs = parse_references(a);
    const Index d = data.d();

    std::vector<Matrix> class_refs;
    std::vector<std::vector<Index>> members;
    if (config.supervised) {
        if (!data.labels) throw Error(ErrorCode::MissingClassReference, "--supervised needs a 'label' column in --input");
        members = data.class_members();
        if (refs.size() != 1 && refs.size() != members.size()) {
            throw Error(ErrorCode::MissingClassReference, "got " + std::to_string(refs.size()) + " references for " +
                                                              std::to_string(members.size()) + " classes");
        }
        for (std::size_t c = 0; c < members.size(); ++c) {
            const auto& src = refs.size() == 1 ? refs.front() : refs[c];
            const auto nc = static_cast<Index>(members[c].size());
            if (config.k >= nc) {
                throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(config.k) + " must be smaller than class " +
                                                      std::to_string(data.label_values[c]) + " size " + std::to_string(nc));
            }
            Rng stream(a.seed, 1000 + c);
            class_refs.push_back(sample_reference(src.spec, nc, d, stream.next()));
        }
    } else {
        if (refs.size() != 1) throw Error(ErrorCode::InvalidParameter, "give exactly one reference without --supervised");
        config.validate(data.n());
        Rng stream(a.seed, 1000);
        class_refs.push_back(sample_reference(refs.front().spec, data.n(), d, stream.next()));
    }

    const Trajectory traj = config.supervised ? transform_supervised(data, class_refs, config)
                                              : transform(data.points, class_refs.front(), config);

    namespace fs = std::filesystem;
    fs::create_directories(a.out);
    std::vector<long long> original_labels;
    if (data.labels) {
        for (int c : *data.labels) original_labels.push_back(data.label_values[static_cast<std::size_t>(c)]);
    }
    const auto* label_ptr = data.labels ? &original_labels : nullptr;

    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& s : traj.snapshots) {
        const auto name = snapshot_name(s.iteration);
        io::write_points((fs::path(a.out) / name).string(), s.points, label_ptr);
        snaps.push_back({{"iteration", s.iteration}, {"cost", s.cost}, {"file", name}});
    }

    nlohmann::json manifest;
    manifest["command"] = command;
    manifest["config"] = io::to_json(config);
    manifest["seed"] = a.seed;
    manifest["input"] = {{"path", a.input}, {"sha256", file_digest(a.input)}, {"n", data.n()}, {"d", data.d()}};
    if (!init_info.is_null()) manifest["init"] = init_info;
    nlohmann::json ref_desc = nlohmann::json::array();
    for (const auto& r : refs) ref_desc.push_back(r.description);
    manifest["references"] = ref_desc;
    manifest["timings"] = {{"matching_seconds", traj.timings.matching_seconds},
                           {"optimization_seconds", traj.timings.optimization_seconds}};
    manifest["stop_reason"] = to_string(traj.stop_reason);
    manifest["iterations"] = traj.iterations();
    manifest["initial_cost"] = traj.initial_cost();
    manifest["final_cost"] = traj.final_cost();
    manifest["snapshots"] = snaps;

    nlohmann::json metrics;
    if (a.metrics) {
        metrics = two_sample_json(data.points, traj.final_points, traj.matched_reference);
        if (data.labels) {
            const auto ks = recall_ks(data.n());
            if (!ks.empty()) {
                metrics["recall_at_before"] = recall_json(recall_at_k(data.points, *data.labels, ks));
                metrics["recall_at"] = recall_json(recall_at_k(traj.final_points, *data.labels, ks));
            }
        }
    }

    if (config.supervised) {
        nlohmann::json per_class = nlohmann::json::array();
        for (std::size_t c = 0; c < members.size(); ++c) {
            const Matrix fin = gather_rows(traj.final_points, members[c]);
            const Matrix ref = gather_rows(traj.matched_reference, members[c]);
            nlohmann::json entry = {{"label", data.label_values[c]}, {"qq_lines", qq_json(qq_line_diagnostics(fin, ref))}};
            manifest["classes"].push_back(entry);
            if (a.metrics) {
                auto m = two_sample_json(gather_rows(data.points, members[c]), fin, ref);
                m["label"] = data.label_values[c];
                per_class.push_back(m);
            }
        }
        if (a.metrics) metrics["per_class"] = per_class;
    } else {
        manifest["qq_lines"] = qq_json(qq_line_diagnostics(traj.final_points, traj.matched_reference));
    }

    {
        std::ofstream mf(fs::path(a.out) / "manifest.json");
        mf << manifest.dump(2) << '\n';
    }
    if (a.metrics) {
        std::ofstream mf(fs::path(a.out) / "metrics.json");
        mf << metrics.dump(2) << '\n';
    }
    out << "wrote " << traj.snapshots.size() << " snapshot(s) to " << a.out << " (" << to_string(traj.stop_reason) << ", "
        << traj.iterations() << " iterations)\n";
    return traj.stop_reason == StopReason::Diverged ? kExitNumeric : kExitOk;
}

}  // namespace detail

/// Entry point shared by the `qqe` binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Quantile-quantile embedding: distribution transformation and embedding reshaping", "qqe"};
    app.require_subcommand(1);

    detail::TransformArgs targs;
    auto* transform_cmd = app.add_subcommand("transform", "Transform a dataset toward a reference distribution");
    detail::add_transform_options(*transform_cmd, targs);

    detail::TransformArgs eargs;
    auto* embed_cmd = app.add_subcommand("embed", "Initialize a low-dimensional embedding, then transform it");
    detail::add_transform_options(*embed_cmd, eargs);
    embed_cmd->add_option("--init", eargs.init, "pca:P | external:PATH")->required();

    std::string a_path, b_path, kernel = "rbf", pairing = "matched";
    double bandwidth = 0.0;
    bool use_labels = false;
    std::vector<int> recall_k{1, 5, 10};
    auto* metrics_cmd = app.add_subcommand("metrics", "KL, MMD^2, HSIC (and Recall@k) between two samples");
    metrics_cmd->add_option("--a", a_path, "First sample CSV")->required();
    metrics_cmd->add_option("--b", b_path, "Second sample CSV")->required();
    metrics_cmd->add_option("--kernel", kernel, "rbf | linear")->check(CLI::IsMember({"rbf", "linear"}));
    metrics_cmd->add_option("--bandwidth", bandwidth, "Fixed RBF bandwidth (default: median heuristic)");
    metrics_cmd->add_option("--kl-pairing", pairing, "matched | same-point")->check(CLI::IsMember({"matched", "same-point"}));
    metrics_cmd->add_flag("--labels", use_labels, "Report Recall@k using the 'label' column of --a");
    metrics_cmd->add_option("--recall-k", recall_k, "k values for Recall@k")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (transform_cmd->parsed()) {
            const Dataset data = io::read_dataset(targs.input);
            return detail::run_pipeline("transform", *transform_cmd, targs, data, nullptr, out);
        }
        if (embed_cmd->parsed()) {
            Dataset data = io::read_dataset(eargs.input);
            nlohmann::json info;
            const auto colon = eargs.init.find(':');
            const std::string method = eargs.init.substr(0, colon);
            const std::string arg = colon == std::string::npos ? "" : eargs.init.substr(colon + 1);
            if (method == "pca") {
                int p = 0;
                try {
                    std::size_t used = 0;
                    p = std::stoi(arg, &used);
                    if (used != arg.size()) throw std::invalid_argument(arg);
                } catch (const std::exception&) {
                    throw Error(ErrorCode::InvalidParameter, "--init pca:P needs an integer P, got '" + arg + "'");
                }
                const auto fit = pca_fit(data.points, p);
                if (fit.rank_deficient) err << "warning: PCA target dimension exceeds the numerical rank; padded with zeros\n";
                data.points = fit.embedding;
                info = {{"method", "pca"}, {"dim", p}, {"rank_deficient", fit.rank_deficient}};
            } else if (method == "external") {
                data.points = load_external_embedding(arg, data.n());
                info = {{"method", "external"}, {"path", arg}, {"sha256", file_digest(arg)}};
            } else {
                throw Error(ErrorCode::InvalidParameter, "--init must be pca:P or external:PATH");
            }
            return detail::run_pipeline("embed", *embed_cmd, eargs, data, info, out);
        }
        // metrics
        const Dataset a = io::read_dataset(a_path);
        const Dataset b = io::read_dataset(b_path);
        if (a.d() != b.d() || a.n() != b.n()) {
            throw Error(ErrorCode::ShapeMismatch, "--a is " + std::to_string(a.n()) + "x" + std::to_string(a.d()) +
                                                      ", --b is " + std::to_string(b.n()) + "x" + std::to_string(b.d()));
        }
        KernelSpec spec = kernel == "linear" ? KernelSpec::linear()
                                             : KernelSpec::rbf(bandwidth > 0.0 ? std::optional<double>(bandwidth) : std::nullopt);
        nlohmann::json j;
        j["kl"] = kl_divergence(a.points, b.points, pairing == "matched" ? KlPairing::MatchedIndex : KlPairing::SamePoint);
        j["mmd2"] = mmd_squared(a.points, b.points, spec);
        j["hsic"] = hsic(a.points, b.points, spec);
        if (use_labels) {
            if (!a.labels) throw Error(ErrorCode::InvalidParameter, "--labels needs a 'label' column in --a");
            std::vector<int> ks;
            for (int k : recall_k) {
                if (k < a.n()) ks.push_back(k);
            }
            j["recall_at"] = detail::recall_json(recall_at_k(a.points, *a.labels, ks));
        }
        out << j.dump(2) << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}

}  // namespace qqe::cli
