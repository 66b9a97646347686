// mwp-probe: corpus scoring, feature extraction, classifier training and
// analysis for math-word-problem difficulty studies.

#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mwp/pipeline.hpp"
#include "mwp/reports.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

int cmd_validate(const std::string& config_path) {
    mwp::RunConfig cfg = mwp::load_config(config_path);
    mwp::ValidationReport rep = mwp::validate_config(cfg);
    for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
    for (const auto& n : rep.notes) std::cout << n << "\n";
    if (!rep.ok()) return kExitConfig;
    std::cout << "resolved configuration:\n" << mwp::config_to_json(cfg).dump(2) << "\n";
    return kExitOk;
}

int cmd_run(const std::string& config_path, const std::set<std::string>& stages,
            std::optional<uint64_t> seed_override, const std::string& out_override) {
    mwp::RunConfig cfg = mwp::load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    mwp::ValidationReport rep = mwp::validate_config(cfg);
    if (!rep.ok()) {
        for (const auto& e : rep.errors) std::cerr << "error: " << e << "\n";
        return kExitConfig;
    }

    auto want = [&](const char* s) { return stages.empty() || stages.count(s) > 0; };
    std::vector<std::string> warnings;
    mwp::LoadedInputs inputs = mwp::load_inputs(cfg);

    if (want("score")) mwp::run_score_stage(cfg, inputs, &warnings);
    if (want("features")) mwp::run_features_stage(cfg, inputs, &warnings);

    mwp::TrainStageResult trained;
    if (want("train")) {
        if (!std::filesystem::exists(mwp::paths::features_dir(cfg) + "/train.csv")) {
            std::cerr << "error: train stage requires the features stage cache\n";
            return kExitData;
        }
        trained = mwp::run_train_stage(cfg);
    }
    if (want("analyze")) {
        if (!std::filesystem::exists(mwp::paths::features_dir(cfg) + "/train.csv")) {
            std::cerr << "error: analyze stage requires the features stage cache\n";
            return kExitData;
        }
        if (trained.models.empty() && std::filesystem::exists(mwp::paths::train_dir(cfg))) {
            // reload cached models for importance aggregation
            for (const auto& entry :
                 std::filesystem::directory_iterator(mwp::paths::train_dir(cfg))) {
                std::string name = entry.path().stem().string();
                size_t us = name.rfind('_');
                if (us == std::string::npos) continue;
                mwp::TrainedModel m = mwp::load_model(entry.path().string());
                trained.models[name.substr(0, us)][name.substr(us + 1)] = std::move(m);
            }
        }
        mwp::run_analyze_stage(cfg, inputs, trained);
    }

    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "done; artifacts under " << cfg.out_dir << " (config hash "
              << mwp::config_hash(cfg) << ")\n";
    return kExitOk;
}

int cmd_report(const std::string& out_dir) {
    std::string reports = out_dir + "/reports";
    std::string manifest_path = reports + "/manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        std::cerr << "error: no manifest at " << manifest_path << " (run 'run' first)\n";
        return kExitData;
    }
    std::ifstream in(manifest_path);
    nlohmann::json manifest;
    in >> manifest;
    std::cout << "# Run summary\n\nconfig hash: " << manifest.at("config_hash").get<std::string>()
              << "\nseed: " << manifest.at("seed") << "\n";
    for (const auto& f : manifest.at("artifacts")) {
        std::string name = f.get<std::string>();
        if (name.size() < 4 || name.substr(name.size() - 4) != ".txt") continue;
        std::cout << "\n## " << name.substr(0, name.size() - 4) << "\n\n";
        std::ifstream t(reports + "/" + name);
        std::cout << t.rdbuf();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"math-word-problem difficulty analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir, stages_arg;
    std::optional<uint64_t> seed;

    auto* validate = app.add_subcommand("validate", "check a run configuration");
    validate->add_option("--config", config_path, "configuration JSON")->required();

    auto* run = app.add_subcommand("run", "execute pipeline stages");
    run->add_option("--config", config_path, "configuration JSON")->required();
    run->add_option("--stages", stages_arg, "comma-separated subset of score,features,train,analyze");
    run->add_option("--seed", seed, "override the configured seed");
    run->add_option("--out", out_dir, "override the configured output directory");

    auto* report = app.add_subcommand("report", "render a run summary");
    report->add_option("--out", out_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(config_path);
        if (run->parsed()) {
            std::set<std::string> stages;
            std::stringstream ss(stages_arg);
            std::string s;
            while (std::getline(ss, s, ','))
                if (!s.empty()) stages.insert(s);
            for (const auto& st : stages) {
                if (st != "score" && st != "features" && st != "train" && st != "analyze") {
                    std::cerr << "error: unknown stage '" << st << "'\n";
                    return kExitConfig;
                }
            }
            return cmd_run(config_path, stages, seed, out_dir);
        }
        if (report->parsed()) return cmd_report(out_dir);
    } catch (const mwp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mwp::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
