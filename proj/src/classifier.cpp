#include "ctbpnet/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include "ctbpnet/textio.hpp"

namespace ctbpnet {

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

void FeatureTable::validate() const {
    for (const auto& r : rows) {
        if (r.values.size() != columns.size())
            throw std::invalid_argument("feature row '" + r.network_id + "' has " + std::to_string(r.values.size()) +
                                        " values for " + std::to_string(columns.size()) + " columns");
        for (double x : r.values)
            if (!std::isfinite(x)) throw std::invalid_argument("non-finite feature in row '" + r.network_id + "'");
    }
}

FeatureTable FeatureTable::subset(std::span<const std::size_t> indices) const {
    FeatureTable out;
    out.columns = columns;
    out.rows.reserve(indices.size());
    for (auto i : indices) out.rows.push_back(rows.at(i));
    return out;
}

std::vector<std::vector<std::size_t>> FeatureTable::indices_by_label(int n_classes) const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const int y = rows[i].label;
        if (y == kUnlabeled) throw std::invalid_argument("unlabeled row '" + rows[i].network_id + "'");
        if (y < 0 || y >= n_classes) throw std::invalid_argument("label out of range in row '" + rows[i].network_id + "'");
        out[static_cast<std::size_t>(y)].push_back(i);
    }
    return out;
}

FeatureTable FeatureTable::load_csv(const std::filesystem::path& path) {
    const auto text = textio::read_file(path);
    const auto lines = textio::lines(text);
    if (lines.empty()) throw std::invalid_argument(path.string() + ": empty feature file");
    const auto header = textio::split_fields(lines.front());
    if (header.size() < 2 || header[0] != "network_id" || header[1] != "class_code")
        throw std::invalid_argument(path.string() + ": header must start with network_id,class_code");

    std::vector<int> meta_col(3, -1);  // mode, s, r
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 2; c < header.size(); ++c) {
        if (header[c] == "mode")
            meta_col[0] = static_cast<int>(c);
        else if (header[c] == "s")
            meta_col[1] = static_cast<int>(c);
        else if (header[c] == "r")
            meta_col[2] = static_cast<int>(c);
        else
            feature_cols.push_back(c);
    }
    const bool dynamic = meta_col[0] >= 0 && meta_col[1] >= 0 && meta_col[2] >= 0;

    FeatureTable t;
    std::string family;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto f = textio::split_fields(lines[li]);
        if (f.size() != header.size())
            throw std::invalid_argument(path.string() + ": line " + std::to_string(li + 1) + " has wrong width");
        FeatureRow row;
        row.network_id = f[0];
        row.label = (f[1].empty() || f[1] == "-1") ? kUnlabeled : static_cast<int>(textio::parse_int(f[1]));
        row.values.reserve(feature_cols.size());
        for (auto c : feature_cols) row.values.push_back(textio::parse_double(f[c]));
        if (dynamic) {
            // "time+total" marks grouping by total degree.
            auto mode = f[static_cast<std::size_t>(meta_col[0])];
            std::string suffix;
            if (auto plus = mode.find('+'); plus != std::string::npos) {
                suffix = ":" + mode.substr(plus + 1);
                mode.resize(plus);
            }
            const auto fam = mode + ":" + f[static_cast<std::size_t>(meta_col[1])] + "x" +
                             f[static_cast<std::size_t>(meta_col[2])] + suffix;
            if (family.empty())
                family = fam;
            else if (fam != family)
                throw std::invalid_argument(path.string() + ": mixed cohort specs in one file");
        }
        t.rows.push_back(std::move(row));
    }
    for (auto c : feature_cols) {
        if (dynamic && !family.empty())
            t.columns.push_back(family + "." + header[c]);
        else
            t.columns.push_back(header[c]);
    }
    t.validate();
    return t;
}

void FeatureTable::save_csv(const std::filesystem::path& path) const {
    std::string out = "network_id,class_code";
    for (const auto& c : columns) out += "," + c;
    out += "\n";
    for (const auto& r : rows) {
        out += r.network_id + "," + std::to_string(r.label);
        for (double x : r.values) out += "," + textio::format_double(x);
        out += "\n";
    }
    textio::write_file_atomic(path, out);
}

FeatureTable join_tables(const FeatureTable& left, const FeatureTable& right) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < right.rows.size(); ++i) index.emplace(right.rows[i].network_id, i);
    std::set<std::string> names(left.columns.begin(), left.columns.end());
    for (const auto& c : right.columns)
        if (!names.insert(c).second) throw std::invalid_argument("join_tables: duplicate column '" + c + "'");

    FeatureTable out;
    out.columns = left.columns;
    out.columns.insert(out.columns.end(), right.columns.begin(), right.columns.end());
    for (const auto& lr : left.rows) {
        auto it = index.find(lr.network_id);
        if (it == index.end()) continue;
        const auto& rr = right.rows[it->second];
        if (lr.label != rr.label) throw std::invalid_argument("join_tables: label mismatch for '" + lr.network_id + "'");
        FeatureRow row = lr;
        row.values.insert(row.values.end(), rr.values.begin(), rr.values.end());
        out.rows.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw std::invalid_argument("learning_rate must lie in (0,1]");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (max_bins < 2 || max_bins > 256) throw std::invalid_argument("max_bins must lie in [2,256]");
    if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
    if (!(l2_regularization >= 0.0)) throw std::invalid_argument("l2_regularization must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"n_trees", n_trees},         {"learning_rate", learning_rate},
            {"max_depth", max_depth},     {"max_bins", max_bins},
            {"min_samples_leaf", min_samples_leaf}, {"l2_regularization", l2_regularization},
            {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.n_trees = j.value("n_trees", c.n_trees);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.max_bins = j.value("max_bins", c.max_bins);
    c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
    c.l2_regularization = j.value("l2_regularization", c.l2_regularization);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

std::vector<TrainConfig> default_grid() {
    std::vector<TrainConfig> grid;
    for (int n : {100, 300})
        for (int depth : {4, 8})
            for (double lr : {0.05, 0.1}) {
                TrainConfig c;
                c.n_trees = n;
                c.max_depth = depth;
                c.learning_rate = lr;
                grid.push_back(c);
            }
    return grid;
}

// ---------------------------------------------------------------------------
// Trees and model
// ---------------------------------------------------------------------------

double Tree::predict(std::span<const double> x) const {
    int i = 0;
    for (;;) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.feature_index < 0) return n.leaf_value;
        i = x[static_cast<std::size_t>(n.feature_index)] <= n.threshold ? n.left : n.right;
    }
}

bool Tree::uses_feature(int f) const {
    return std::any_of(nodes.begin(), nodes.end(), [f](const TreeNode& n) { return n.feature_index == f; });
}

std::vector<double> softmax(std::span<const double> m) {
    const double mx = *std::max_element(m.begin(), m.end());
    std::vector<double> p(m.size());
    double z = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) z += (p[k] = std::exp(m[k] - mx));
    for (auto& x : p) x /= z;
    return p;
}

double softmax_loss(std::span<const double> margins, std::span<const int> labels, int K) {
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto m = margins.subspan(i * static_cast<std::size_t>(K), static_cast<std::size_t>(K));
        const double mx = *std::max_element(m.begin(), m.end());
        double z = 0.0;
        for (double v : m) z += std::exp(v - mx);
        total += std::log(z) + mx - m[static_cast<std::size_t>(labels[i])];
    }
    return total / static_cast<double>(labels.size());
}

std::vector<double> softmax_gradient(std::span<const double> margins, int label) {
    auto p = softmax(margins);
    p[static_cast<std::size_t>(label)] -= 1.0;
    return p;
}

std::vector<double> GbdtModel::predict_margin(std::span<const double> x, std::size_t n_stages) const {
    std::vector<double> m = baseline;
    n_stages = std::min(n_stages, stages.size());
    for (std::size_t s = 0; s < n_stages; ++s)
        for (std::size_t k = 0; k < stages[s].size(); ++k) m[k] += stages[s][k].predict(x);
    return m;
}

std::vector<double> GbdtModel::predict_proba(std::span<const double> x) const {
    if (x.size() != n_features())
        throw std::invalid_argument("predict_proba: row has " + std::to_string(x.size()) + " features, model expects " +
                                    std::to_string(n_features()));
    return softmax(predict_margin(x, stages.size()));
}

int GbdtModel::predict(std::span<const double> x) const {
    const auto p = predict_proba(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

GbdtModel GbdtModel::truncated(std::size_t n) const {
    GbdtModel out = *this;
    if (n < out.stages.size()) out.stages.resize(n);
    out.config.n_trees = static_cast<int>(out.stages.size());
    return out;
}

nlohmann::json GbdtModel::to_json() const {
    nlohmann::json stages_j = nlohmann::json::array();
    for (const auto& stage : stages) {
        nlohmann::json per_class = nlohmann::json::array();
        for (const auto& tree : stage) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : tree.nodes)
                nodes.push_back({{"feature_index", n.feature_index},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"leaf_value", n.leaf_value}});
            per_class.push_back(std::move(nodes));
        }
        stages_j.push_back(std::move(per_class));
    }
    return {{"format", std::string(kFormat)}, {"n_classes", n_classes},   {"feature_names", feature_names},
            {"baseline", baseline},           {"bin_edges", bin_edges},   {"config", config.to_json()},
            {"stages", std::move(stages_j)}};
}

GbdtModel GbdtModel::from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != kFormat)
        throw std::invalid_argument("unsupported model format '" + j.value("format", std::string()) + "'");
    GbdtModel m;
    m.n_classes = j.at("n_classes").get<int>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.baseline = j.at("baseline").get<std::vector<double>>();
    m.bin_edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
    m.config = TrainConfig::from_json(j.at("config"));
    for (const auto& stage : j.at("stages")) {
        std::vector<Tree> per_class;
        for (const auto& tree_j : stage) {
            Tree t;
            for (const auto& n : tree_j)
                t.nodes.push_back(TreeNode{n.at("feature_index").get<int>(), n.at("threshold").get<double>(),
                                           n.at("left").get<int>(), n.at("right").get<int>(),
                                           n.at("leaf_value").get<double>()});
            per_class.push_back(std::move(t));
        }
        m.stages.push_back(std::move(per_class));
    }
    if (static_cast<int>(m.baseline.size()) != m.n_classes) throw std::invalid_argument("model baseline size mismatch");
    return m;
}

void GbdtModel::save(const std::filesystem::path& path) const { textio::write_file_atomic(path, to_json().dump() + "\n"); }

GbdtModel GbdtModel::load(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(textio::read_file(path)));
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

std::vector<double> bin_thresholds(std::vector<double> col, int max_bins) {
    std::sort(col.begin(), col.end());
    std::vector<double> distinct = col;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> thr;
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
            thr.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
    } else {
        const double n1 = static_cast<double>(col.size() - 1);
        for (int k = 1; k < max_bins; ++k) {
            const double h = n1 * k / max_bins;
            const auto lo = static_cast<std::size_t>(h);
            const auto hi = std::min(lo + 1, col.size() - 1);
            thr.push_back(col[lo] + (h - static_cast<double>(lo)) * (col[hi] - col[lo]));
        }
        thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
        if (!thr.empty() && thr.back() >= distinct.back()) thr.pop_back();
    }
    return thr;
}

struct HistBin {
    double g = 0.0;
    double h = 0.0;
    std::uint32_t n = 0;
};

struct BinnedData {
    std::size_t n_rows = 0;
    std::vector<std::vector<std::uint8_t>> bins;  // [feature][row]
    std::vector<std::size_t> offset;             // histogram offset per feature
    std::vector<int> n_bins;
    std::size_t total_bins = 0;
};

class TreeBuilder {
public:
    TreeBuilder(const BinnedData& data, const std::vector<std::vector<double>>& edges, const TrainConfig& cfg,
                const std::vector<double>& g, const std::vector<double>& h)
        : data_(data), edges_(edges), cfg_(cfg), g_(g), h_(h) {}

    Tree build() {
        std::vector<std::uint32_t> idx(data_.n_rows);
        std::iota(idx.begin(), idx.end(), 0u);
        auto hist = histogram(idx);
        double G = 0.0, H = 0.0;
        for (auto i : idx) {
            G += g_[i];
            H += h_[i];
        }
        grow(std::move(idx), std::move(hist), G, H, 0);
        return std::move(tree_);
    }

private:
    std::vector<HistBin> histogram(const std::vector<std::uint32_t>& idx) const {
        std::vector<HistBin> hist(data_.total_bins);
        for (std::size_t f = 0; f < data_.bins.size(); ++f) {
            HistBin* base = hist.data() + data_.offset[f];
            const auto& col = data_.bins[f];
            for (auto i : idx) {
                auto& b = base[col[i]];
                b.g += g_[i];
                b.h += h_[i];
                ++b.n;
            }
        }
        return hist;
    }

    double score(double G, double H) const { return G * G / (H + cfg_.l2_regularization + 1e-16); }

    int grow(std::vector<std::uint32_t> idx, std::vector<HistBin> hist, double G, double H, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        const auto n = idx.size();
        const auto min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);

        int best_f = -1, best_b = -1;
        double best_gain = 1e-12;
        double best_GL = 0.0, best_HL = 0.0;
        if (depth < cfg_.max_depth && n >= 2 * min_leaf) {
            const double parent = score(G, H);
            for (std::size_t f = 0; f < data_.bins.size(); ++f) {
                const HistBin* base = hist.data() + data_.offset[f];
                double GL = 0.0, HL = 0.0;
                std::size_t nL = 0;
                for (int b = 0; b + 1 < data_.n_bins[f]; ++b) {
                    GL += base[b].g;
                    HL += base[b].h;
                    nL += base[b].n;
                    if (nL < min_leaf) continue;
                    if (n - nL < min_leaf) break;
                    const double gain = score(GL, HL) + score(G - GL, H - HL) - parent;
                    if (gain > best_gain) {
                        best_gain = gain;
                        best_f = static_cast<int>(f);
                        best_b = b;
                        best_GL = GL;
                        best_HL = HL;
                    }
                }
            }
        }

        if (best_f < 0) {
            tree_.nodes[static_cast<std::size_t>(id)].leaf_value =
                -cfg_.learning_rate * G / (H + cfg_.l2_regularization + 1e-16);
            return id;
        }

        const auto& col = data_.bins[static_cast<std::size_t>(best_f)];
        std::vector<std::uint32_t> left, right;
        left.reserve(n);
        right.reserve(n);
        for (auto i : idx) (col[i] <= best_b ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        std::vector<HistBin> hl, hr;
        if (left.size() <= right.size()) {
            hl = histogram(left);
            hr = subtract(hist, hl);
        } else {
            hr = histogram(right);
            hl = subtract(hist, hr);
        }
        hist.clear();
        hist.shrink_to_fit();

        const double GL = best_GL, HL = best_HL;
        const int l = grow(std::move(left), std::move(hl), GL, HL, depth + 1);
        const int r = grow(std::move(right), std::move(hr), G - GL, H - HL, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature_index = best_f;
        node.threshold = edges_[static_cast<std::size_t>(best_f)][static_cast<std::size_t>(best_b)];
        node.left = l;
        node.right = r;
        return id;
    }

    static std::vector<HistBin> subtract(const std::vector<HistBin>& parent, const std::vector<HistBin>& child) {
        std::vector<HistBin> out(parent.size());
        for (std::size_t k = 0; k < parent.size(); ++k)
            out[k] = HistBin{parent[k].g - child[k].g, parent[k].h - child[k].h, parent[k].n - child[k].n};
        return out;
    }

    const BinnedData& data_;
    const std::vector<std::vector<double>>& edges_;
    const TrainConfig& cfg_;
    const std::vector<double>& g_;
    const std::vector<double>& h_;
    Tree tree_;
};

}  // namespace

GbdtModel train_gbdt(const FeatureTable& train, const TrainConfig& config, int n_classes, LossTrace* trace) {
    config.validate();
    train.validate();
    if (n_classes < 2) throw std::invalid_argument("train_gbdt: need at least two classes");
    const auto by_label = train.indices_by_label(n_classes);
    const auto present = std::count_if(by_label.begin(), by_label.end(), [](const auto& v) { return !v.empty(); });
    if (present < 2) throw std::invalid_argument("train_gbdt: training data holds a single class");

    const std::size_t n = train.rows.size(), F = train.width();
    const auto K = static_cast<std::size_t>(n_classes);

    GbdtModel model;
    model.n_classes = n_classes;
    model.feature_names = train.columns;
    model.config = config;
    model.baseline.resize(K);
    for (std::size_t k = 0; k < K; ++k)
        model.baseline[k] = std::log(std::max(static_cast<double>(by_label[k].size()) / static_cast<double>(n), 1e-12));

    BinnedData data;
    data.n_rows = n;
    data.bins.resize(F);
    model.bin_edges.resize(F);
    for (std::size_t f = 0; f < F; ++f) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = train.rows[i].values[f];
        model.bin_edges[f] = bin_thresholds(col, config.max_bins);
        const auto& thr = model.bin_edges[f];
        data.bins[f].resize(n);
        for (std::size_t i = 0; i < n; ++i)
            data.bins[f][i] = static_cast<std::uint8_t>(std::lower_bound(thr.begin(), thr.end(), col[i]) - thr.begin());
        data.offset.push_back(data.total_bins);
        data.n_bins.push_back(static_cast<int>(thr.size()) + 1);
        data.total_bins += thr.size() + 1;
    }

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = train.rows[i].label;
    std::vector<double> margins(n * K);
    for (std::size_t i = 0; i < n; ++i) std::copy(model.baseline.begin(), model.baseline.end(), margins.begin() + i * K);
    if (trace) {
        trace->clear();
        trace->push_back(softmax_loss(margins, labels, n_classes));
    }

    std::vector<double> probs(n * K), g(n), h(n);
    for (int round = 0; round < config.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            auto p = softmax(std::span<const double>(margins).subspan(i * K, K));
            std::copy(p.begin(), p.end(), probs.begin() + i * K);
        }
        std::vector<Tree> stage;
        stage.reserve(K);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                const double p = probs[i * K + k];
                g[i] = p - (labels[i] == static_cast<int>(k) ? 1.0 : 0.0);
                h[i] = std::max(p * (1.0 - p), 1e-16);
            }
            stage.push_back(TreeBuilder(data, model.bin_edges, config, g, h).build());
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < K; ++k) margins[i * K + k] += stage[k].predict(train.rows[i].values);
        model.stages.push_back(std::move(stage));
        if (trace) trace->push_back(softmax_loss(margins, labels, n_classes));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

Split stratified_split(const FeatureTable& table, double test_fraction, Rng& rng, int n_classes) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw std::invalid_argument("test_fraction must lie in (0,1)");
    auto by_label = table.indices_by_label(n_classes);
    Split split;
    for (auto& idx : by_label) {
        if (idx.empty()) continue;
        if (idx.size() < 2) throw std::invalid_argument("stratified_split: every class needs at least two rows");
        rng.shuffle(idx);
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * test_fraction));
        split.test.insert(split.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::vector<int> stratified_folds(const FeatureTable& table, int k, Rng& rng, int n_classes) {
    if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
    auto by_label = table.indices_by_label(n_classes);
    std::vector<int> fold(table.rows.size(), 0);
    int next = 0;
    for (auto& idx : by_label) {
        rng.shuffle(idx);
        // Continue the round-robin across classes so fold sizes stay balanced.
        for (auto i : idx) {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    return fold;
}

double accuracy(const GbdtModel& model, const FeatureTable& table) {
    if (table.rows.empty()) return 0.0;
    std::size_t hit = 0;
    for (const auto& r : table.rows) hit += model.predict(r.values) == r.label;
    return static_cast<double>(hit) / static_cast<double>(table.rows.size());
}

CvResult cross_validate(const FeatureTable& table, int k, const std::vector<TrainConfig>& grid, Rng& rng,
                        int n_classes) {
    if (grid.empty()) throw std::invalid_argument("cross_validate: empty grid");
    const auto fold = stratified_folds(table, k, rng, n_classes);

    // Boosting is deterministic, so a model with fewer rounds is a prefix of
    // one with more: configs differing only in n_trees share one fit.
    using Key = std::tuple<double, int, int, int, double>;
    std::map<Key, std::vector<std::size_t>> groups;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        grid[g].validate();
        const auto& c = grid[g];
        groups[Key{c.learning_rate, c.max_depth, c.max_bins, c.min_samples_leaf, c.l2_regularization}].push_back(g);
    }

    std::vector<std::vector<double>> fold_acc(grid.size());
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? te : tr).push_back(i);
        const auto train = table.subset(tr);
        const auto test = table.subset(te);
        for (const auto& [key, members] : groups) {
            TrainConfig cfg = grid[members.front()];
            for (auto g : members) cfg.n_trees = std::max(cfg.n_trees, grid[g].n_trees);
            const auto model = train_gbdt(train, cfg, n_classes);
            for (auto g : members) fold_acc[g].push_back(accuracy(model.truncated(static_cast<std::size_t>(grid[g].n_trees)), test));
        }
    }

    CvResult out;
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double mean = std::accumulate(fold_acc[g].begin(), fold_acc[g].end(), 0.0) / k;
        out.mean_accuracy.push_back(mean);
        if (g == 0) continue;
        const double bm = out.mean_accuracy[best];
        const auto& a = grid[g];
        const auto& b = grid[best];
        if (mean > bm || (mean == bm && std::tie(a.n_trees, a.max_depth) < std::tie(b.n_trees, b.max_depth))) best = g;
    }
    out.best = grid[best];
    out.best_fold_accuracies = fold_acc[best];
    return out;
}

nlohmann::json EvalReport::to_json() const {
    return {{"accuracy", accuracy},
            {"confusion", confusion},
            {"precision", precision},
            {"recall", recall},
            {"feature_names", feature_names},
            {"permutation_importance", permutation_importance}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<long>>>();
    r.precision = j.at("precision").get<std::vector<double>>();
    r.recall = j.at("recall").get<std::vector<double>>();
    r.feature_names = j.value("feature_names", std::vector<std::string>{});
    r.permutation_importance = j.value("permutation_importance", std::vector<double>{});
    return r;
}

EvalReport evaluate(const GbdtModel& model, const FeatureTable& test) {
    const auto K = static_cast<std::size_t>(model.n_classes);
    EvalReport rep;
    rep.feature_names = model.feature_names;
    rep.confusion.assign(K, std::vector<long>(K, 0));
    long hits = 0;
    for (const auto& r : test.rows) {
        if (r.label < 0 || r.label >= model.n_classes)
            throw std::invalid_argument("evaluate: row '" + r.network_id + "' has no valid label");
        const int p = model.predict(r.values);
        ++rep.confusion[static_cast<std::size_t>(r.label)][static_cast<std::size_t>(p)];
        hits += p == r.label;
    }
    rep.accuracy = test.rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(test.rows.size());
    rep.precision.assign(K, 0.0);
    rep.recall.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        long col = 0, row = 0;
        for (std::size_t j = 0; j < K; ++j) {
            col += rep.confusion[j][k];
            row += rep.confusion[k][j];
        }
        if (col > 0) rep.precision[k] = static_cast<double>(rep.confusion[k][k]) / static_cast<double>(col);
        if (row > 0) rep.recall[k] = static_cast<double>(rep.confusion[k][k]) / static_cast<double>(row);
    }
    return rep;
}

std::vector<double> permutation_importance(const GbdtModel& model, const FeatureTable& table, int n_repeats, Rng& rng) {
    if (n_repeats < 1) throw std::invalid_argument("permutation_importance: n_repeats must be >= 1");
    const std::size_t n = table.rows.size(), F = model.n_features();
    const auto K = static_cast<std::size_t>(model.n_classes);
    std::vector<double> out(F, 0.0);
    if (n == 0) return out;

    std::vector<std::vector<double>> base(n);
    std::size_t base_hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        base[i] = model.predict_margin(table.rows[i].values, model.stages.size());
        base_hits += static_cast<int>(std::max_element(base[i].begin(), base[i].end()) - base[i].begin()) ==
                     table.rows[i].label;
    }
    const double baseline = static_cast<double>(base_hits) / static_cast<double>(n);

    for (std::size_t f = 0; f < F; ++f) {
        std::vector<std::pair<std::size_t, std::size_t>> touched;  // (stage, class)
        for (std::size_t s = 0; s < model.stages.size(); ++s)
            for (std::size_t k = 0; k < K; ++k)
                if (model.stages[s][k].uses_feature(static_cast<int>(f))) touched.emplace_back(s, k);

        double drop = 0.0;
        for (int rep = 0; rep < n_repeats; ++rep) {
            std::vector<std::size_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            rng.shuffle(perm);
            if (touched.empty()) continue;
            std::size_t hits = 0;
            std::vector<double> x;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& orig = table.rows[i].values;
                x = orig;
                x[f] = table.rows[perm[i]].values[f];
                auto m = base[i];
                for (auto [s, k] : touched) m[k] += model.stages[s][k].predict(x) - model.stages[s][k].predict(orig);
                hits += static_cast<int>(std::max_element(m.begin(), m.end()) - m.begin()) == table.rows[i].label;
            }
            drop += baseline - static_cast<double>(hits) / static_cast<double>(n);
        }
        out[f] = drop / n_repeats;
    }
    return out;
}

}  // namespace ctbpnet
