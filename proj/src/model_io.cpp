#include <fstream>
#include <sstream>

#include "dvfs/error.hpp"
#include "dvfs/predictors.hpp"

namespace dvfs {

using nlohmann::json;

json model_to_json(const FittedModel& m) {
    json params;
    if (const auto* lin = std::get_if<LinearParams>(&m.params)) {
        params = {{"intercept", lin->intercept}, {"coef", lin->coef}};
    } else {
        const auto& ens = std::get<TreeEnsemble>(m.params);
        json trees = json::array();
        for (const auto& tree : ens.trees) {
            json nodes = json::array();
            for (const auto& n : tree.nodes) nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
            trees.push_back(std::move(nodes));
        }
        params = {{"base_score", ens.base_score}, {"trees", std::move(trees)}};
    }

    json j = {{"format", "dvfs-model"},
              {"version", kModelFormatVersion},
              {"kind", kind_to_json(m.kind)},
              {"target", to_string(m.target)},
              {"input_dim", m.input_dim},
              {"fingerprint", m.fingerprint},
              {"params", std::move(params)},
              {"training",
               {{"seed", m.info.seed},
                {"n_samples", m.info.n_samples},
                {"train_rmse", m.info.train_rmse},
                {"sweeps", m.info.sweeps},
                {"loss_trace", m.info.loss_trace}}}};
    if (m.input)
        j["input"] = {{"feature_names", m.input->feature_names},
                      {"mean", m.input->norm.mean},
                      {"stddev", m.input->norm.stddev}};
    return j;
}

FittedModel model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "dvfs-model") throw ParseError("not a dvfs model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion)
            throw ParseError("unsupported model file version " + std::to_string(version));

        FittedModel m;
        m.kind = kind_from_json(j.at("kind"));
        m.target = parse_target(j.at("target").get<std::string>());
        m.input_dim = j.at("input_dim").get<std::size_t>();
        m.fingerprint = j.at("fingerprint").get<std::string>();

        const auto& params = j.at("params");
        if (std::holds_alternative<GbrtParams>(m.kind)) {
            TreeEnsemble ens;
            ens.base_score = params.at("base_score").get<double>();
            for (const auto& tree_json : params.at("trees")) {
                RegressionTree tree;
                for (const auto& n : tree_json) {
                    if (!n.is_array() || n.size() != 5) throw ParseError("malformed tree node");
                    tree.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(),
                                          n[4].get<double>()});
                }
                const auto count = static_cast<int>(tree.nodes.size());
                if (count == 0) throw ParseError("empty regression tree");
                // Children always follow their parent, so traversal terminates.
                for (int i = 0; i < count; ++i) {
                    const auto& node = tree.nodes[static_cast<std::size_t>(i)];
                    if (node.feature >= static_cast<int>(m.input_dim)) throw ParseError("tree splits on unknown input");
                    if (node.feature >= 0 &&
                        (node.left <= i || node.left >= count || node.right <= i || node.right >= count))
                        throw ParseError("tree child index out of range");
                }
                ens.trees.push_back(std::move(tree));
            }
            m.params = std::move(ens);
        } else {
            LinearParams lin;
            lin.intercept = params.at("intercept").get<double>();
            lin.coef = params.at("coef").get<std::vector<double>>();
            if (lin.coef.size() != m.input_dim) throw ParseError("coefficient count does not match input_dim");
            m.params = std::move(lin);
        }

        const auto& training = j.at("training");
        m.info.seed = training.at("seed").get<std::uint64_t>();
        m.info.n_samples = training.at("n_samples").get<std::size_t>();
        m.info.train_rmse = training.at("train_rmse").get<double>();
        m.info.sweeps = training.value("sweeps", 0);
        m.info.loss_trace = training.value("loss_trace", std::vector<double>{});

        if (j.contains("input")) {
            const auto& in = j.at("input");
            InputSpec spec;
            spec.feature_names = in.at("feature_names").get<std::vector<std::string>>();
            spec.norm.mean = in.at("mean").get<std::vector<double>>();
            spec.norm.stddev = in.at("stddev").get<std::vector<double>>();
            if (spec.norm.mean.size() != spec.feature_names.size() ||
                spec.norm.stddev.size() != spec.feature_names.size())
                throw ParseError("input normalization does not align with feature names");
            if (spec.input_dim() != m.input_dim) throw ParseError("input schema does not match input_dim");
            if (spec.fingerprint() != m.fingerprint)
                throw ParseError("model fingerprint mismatch: file says " + m.fingerprint + ", schema hashes to " +
                                 spec.fingerprint());
            m.input = std::move(spec);
        } else if (m.fingerprint != anonymous_fingerprint(m.input_dim)) {
            throw ParseError("model fingerprint mismatch for schema-less model");
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model file: ") + e.what());
    } catch (const ValidationError& e) {
        throw ParseError(std::string("model file: ") + e.what());
    }
}

void save_model(const FittedModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file " + path.string());
    out << model_to_json(m).dump(1) << '\n';
    if (!out) throw Error("failed writing model file " + path.string());
}

FittedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("model file " + path.string() + " is not valid JSON (truncated?): " + e.what());
    }
    return model_from_json(j);
}

}  // namespace dvfs
