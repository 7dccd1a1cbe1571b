#include "aed/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "aed/errors.hpp"
#include "aed/tensor.hpp"  // check()

namespace aed {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string texture_to_string(scene::TextureKind k) {
    switch (k) {
        case scene::TextureKind::Checkerboard: return "checkerboard";
        case scene::TextureKind::ValueNoise: return "value_noise";
        case scene::TextureKind::Stripes: return "stripes";
        case scene::TextureKind::Blobs: return "blobs";
    }
    throw std::invalid_argument("unknown texture kind");
}

scene::TextureKind texture_from_string(const std::string& s) {
    if (s == "checkerboard") return scene::TextureKind::Checkerboard;
    if (s == "value_noise") return scene::TextureKind::ValueNoise;
    if (s == "stripes") return scene::TextureKind::Stripes;
    if (s == "blobs") return scene::TextureKind::Blobs;
    throw std::invalid_argument("config: unknown texture kind '" + s + "'");
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

/// Key/value store that tracks which keys were consumed so leftovers can be
/// reported as unknown.
struct KeyValues {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string take(const std::string& key) {
        auto it = values.find(key);
        std::string v = it->second;
        values.erase(it);
        return v;
    }

    void get(const std::string& key, double& out) {
        if (!has(key)) return;
        const std::string v = take(key);
        char* end = nullptr;
        out = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0')
            throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
    }

    void get(const std::string& key, int& out) {
        if (!has(key)) return;
        const std::string v = take(key);
        try {
            std::size_t pos = 0;
            out = std::stoi(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
        }
    }

    void get(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        const std::string v = take(key);
        try {
            std::size_t pos = 0;
            out = std::stoull(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
        }
    }
};

}  // namespace

void RunConfig::validate() const {
    check(train_episodes >= 1, "config: train_episodes must be >= 1");
    check(test_episodes >= 1, "config: test_episodes must be >= 1");
    scene.validate();
    check(pseudo.pool_size >= 1, "config: pseudo.pool_size must be >= 1");
    check(!pseudo.texture_kinds.empty(), "config: pseudo.texture_kinds must be non-empty");
    check(!pseudo.flow_strides.empty(), "config: pseudo.flow_strides must be non-empty");
    for (int k : pseudo.flow_strides)
        check(k >= 2, "config: pseudo.flow_strides entries must be >= 2");
    check(cae.learning_rate > 0.0, "config: cae.learning_rate must be positive");
    check(cae.lambda >= 0.0, "config: cae.lambda must be non-negative");
    // values below 1 are stable; 1.0 is allowed only as the sweep boundary
    check(cae.lambda <= 1.0, "config: cae.lambda must not exceed 1");
    check(cae.epochs >= 1, "config: cae.epochs must be >= 1");
    check(cae.batch_size >= 1, "config: cae.batch_size must be >= 1");
    check(clf.learning_rate > 0.0, "config: clf.learning_rate must be positive");
    check(clf.epochs >= 1, "config: clf.epochs must be >= 1");
    check(clf.batch_size >= 1, "config: clf.batch_size must be >= 1");
    check(filters.mean_kt >= 1 && filters.mean_kt % 2 == 1,
          "config: filters.mean_kt must be odd and >= 1");
    check(filters.mean_kh >= 1 && filters.mean_kh % 2 == 1,
          "config: filters.mean_kh must be odd and >= 1");
    check(filters.mean_kw >= 1 && filters.mean_kw % 2 == 1,
          "config: filters.mean_kw must be odd and >= 1");
    check(filters.gaussian_sigma > 0.0, "config: filters.gaussian_sigma must be positive");
    check(filters.gaussian_radius >= 0, "config: filters.gaussian_radius must be >= 0");
    check(alpha > 0.0 && alpha <= 1.0, "config: metrics.alpha must be in (0,1]");
    check(beta > 0.0 && beta <= 1.0, "config: metrics.beta must be in (0,1]");
}

RunConfig parse_run_config(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: missing '=' at line " +
                                        std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: empty key at line " +
                                        std::to_string(line_no));
        if (kv.values.count(key))
            throw std::invalid_argument("config: duplicate key '" + key + "'");
        kv.values[key] = value;
    }

    RunConfig c;
    kv.get("seed", c.seed);
    kv.get("data.train_episodes", c.train_episodes);
    kv.get("data.test_episodes", c.test_episodes);

    kv.get("scene.frame_height", c.scene.frame_height);
    kv.get("scene.frame_width", c.scene.frame_width);
    kv.get("scene.episode_length", c.scene.episode_length);
    kv.get("scene.objects_per_episode", c.scene.objects_per_episode);
    kv.get("scene.noise_level", c.scene.noise_level);

    int n_normal = static_cast<int>(c.scene.normal_kinds.size());
    kv.get("scene.num_normal_kinds", n_normal);
    check(n_normal >= 1, "config: scene.num_normal_kinds must be >= 1");
    c.scene.normal_kinds.resize(static_cast<std::size_t>(n_normal));
    for (int i = 0; i < n_normal; ++i) {
        const std::string p = "scene.normal_kind." + std::to_string(i) + ".";
        scene::ObjectKind& k = c.scene.normal_kinds[static_cast<std::size_t>(i)];
        if (kv.has(p + "shape")) k.shape = scene::shape_from_string(kv.take(p + "shape"));
        kv.get(p + "size_min", k.size_min);
        kv.get(p + "size_max", k.size_max);
        kv.get(p + "speed_min", k.speed_min);
        kv.get(p + "speed_max", k.speed_max);
        kv.get(p + "intensity_min", k.intensity_min);
        kv.get(p + "intensity_max", k.intensity_max);
    }

    int n_anom = static_cast<int>(c.scene.anomaly_kinds.size());
    kv.get("scene.num_anomaly_kinds", n_anom);
    check(n_anom >= 0, "config: scene.num_anomaly_kinds must be >= 0");
    c.scene.anomaly_kinds.resize(static_cast<std::size_t>(n_anom));
    for (int i = 0; i < n_anom; ++i) {
        const std::string p = "scene.anomaly_kind." + std::to_string(i) + ".";
        scene::AnomalyKind& k = c.scene.anomaly_kinds[static_cast<std::size_t>(i)];
        if (kv.has(p + "shape")) k.shape = scene::shape_from_string(kv.take(p + "shape"));
        kv.get(p + "size", k.size);
        kv.get(p + "speed_multiplier", k.speed_multiplier);
    }

    kv.get("pseudo.pool_size", c.pseudo.pool_size);
    if (kv.has("pseudo.texture_kinds")) {
        c.pseudo.texture_kinds.clear();
        for (const std::string& s : split_commas(kv.take("pseudo.texture_kinds")))
            c.pseudo.texture_kinds.push_back(texture_from_string(s));
    }
    if (kv.has("pseudo.flow_strides")) {
        c.pseudo.flow_strides.clear();
        for (const std::string& s : split_commas(kv.take("pseudo.flow_strides"))) {
            try {
                c.pseudo.flow_strides.push_back(std::stoi(s));
            } catch (const std::exception&) {
                throw std::invalid_argument("config: bad pseudo.flow_strides entry '" +
                                            s + "'");
            }
        }
    }

    kv.get("cae.learning_rate", c.cae.learning_rate);
    kv.get("cae.lambda", c.cae.lambda);
    kv.get("cae.epochs", c.cae.epochs);
    kv.get("cae.batch_size", c.cae.batch_size);
    if (kv.has("cae.loss_kind")) {
        const std::string v = kv.take("cae.loss_kind");
        if (v == "l2")
            c.cae.loss_kind = ReconLossKind::L2;
        else if (v == "l1")
            c.cae.loss_kind = ReconLossKind::L1;
        else
            throw std::invalid_argument("config: cae.loss_kind must be l2 or l1, got '" +
                                        v + "'");
    }

    kv.get("clf.learning_rate", c.clf.learning_rate);
    kv.get("clf.epochs", c.clf.epochs);
    kv.get("clf.batch_size", c.clf.batch_size);
    if (kv.has("clf.diff_mode")) {
        const std::string v = kv.take("clf.diff_mode");
        if (v == "absolute")
            c.diff_mode = DiffMode::Absolute;
        else if (v == "signed")
            c.diff_mode = DiffMode::Signed;
        else
            throw std::invalid_argument(
                "config: clf.diff_mode must be absolute or signed, got '" + v + "'");
    }

    kv.get("filters.mean_kt", c.filters.mean_kt);
    kv.get("filters.mean_kh", c.filters.mean_kh);
    kv.get("filters.mean_kw", c.filters.mean_kw);
    kv.get("filters.gaussian_sigma", c.filters.gaussian_sigma);
    kv.get("filters.gaussian_radius", c.filters.gaussian_radius);
    kv.get("metrics.alpha", c.alpha);
    kv.get("metrics.beta", c.beta);

    if (!kv.values.empty())
        throw std::invalid_argument("config: unknown key '" + kv.values.begin()->first +
                                    "'");
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string config_to_string(const RunConfig& c) {
    std::ostringstream out;
    out << "seed = " << c.seed << "\n";
    out << "data.train_episodes = " << c.train_episodes << "\n";
    out << "data.test_episodes = " << c.test_episodes << "\n";
    out << "scene.frame_height = " << c.scene.frame_height << "\n";
    out << "scene.frame_width = " << c.scene.frame_width << "\n";
    out << "scene.episode_length = " << c.scene.episode_length << "\n";
    out << "scene.objects_per_episode = " << c.scene.objects_per_episode << "\n";
    out << "scene.noise_level = " << fmt_double(c.scene.noise_level) << "\n";
    out << "scene.num_normal_kinds = " << c.scene.normal_kinds.size() << "\n";
    for (std::size_t i = 0; i < c.scene.normal_kinds.size(); ++i) {
        const scene::ObjectKind& k = c.scene.normal_kinds[i];
        const std::string p = "scene.normal_kind." + std::to_string(i) + ".";
        out << p << "shape = " << scene::shape_to_string(k.shape) << "\n";
        out << p << "size_min = " << k.size_min << "\n";
        out << p << "size_max = " << k.size_max << "\n";
        out << p << "speed_min = " << k.speed_min << "\n";
        out << p << "speed_max = " << k.speed_max << "\n";
        out << p << "intensity_min = " << fmt_double(k.intensity_min) << "\n";
        out << p << "intensity_max = " << fmt_double(k.intensity_max) << "\n";
    }
    out << "scene.num_anomaly_kinds = " << c.scene.anomaly_kinds.size() << "\n";
    for (std::size_t i = 0; i < c.scene.anomaly_kinds.size(); ++i) {
        const scene::AnomalyKind& k = c.scene.anomaly_kinds[i];
        const std::string p = "scene.anomaly_kind." + std::to_string(i) + ".";
        out << p << "shape = " << scene::shape_to_string(k.shape) << "\n";
        out << p << "size = " << k.size << "\n";
        out << p << "speed_multiplier = " << fmt_double(k.speed_multiplier) << "\n";
    }
    out << "pseudo.pool_size = " << c.pseudo.pool_size << "\n";
    out << "pseudo.texture_kinds = ";
    for (std::size_t i = 0; i < c.pseudo.texture_kinds.size(); ++i)
        out << (i ? "," : "") << texture_to_string(c.pseudo.texture_kinds[i]);
    out << "\n";
    out << "pseudo.flow_strides = ";
    for (std::size_t i = 0; i < c.pseudo.flow_strides.size(); ++i)
        out << (i ? "," : "") << c.pseudo.flow_strides[i];
    out << "\n";
    out << "cae.learning_rate = " << fmt_double(c.cae.learning_rate) << "\n";
    out << "cae.lambda = " << fmt_double(c.cae.lambda) << "\n";
    out << "cae.epochs = " << c.cae.epochs << "\n";
    out << "cae.batch_size = " << c.cae.batch_size << "\n";
    out << "cae.loss_kind = " << (c.cae.loss_kind == ReconLossKind::L2 ? "l2" : "l1")
        << "\n";
    out << "clf.learning_rate = " << fmt_double(c.clf.learning_rate) << "\n";
    out << "clf.epochs = " << c.clf.epochs << "\n";
    out << "clf.batch_size = " << c.clf.batch_size << "\n";
    out << "clf.diff_mode = "
        << (c.diff_mode == DiffMode::Absolute ? "absolute" : "signed") << "\n";
    out << "filters.mean_kt = " << c.filters.mean_kt << "\n";
    out << "filters.mean_kh = " << c.filters.mean_kh << "\n";
    out << "filters.mean_kw = " << c.filters.mean_kw << "\n";
    out << "filters.gaussian_sigma = " << fmt_double(c.filters.gaussian_sigma) << "\n";
    out << "filters.gaussian_radius = " << c.filters.gaussian_radius << "\n";
    out << "metrics.alpha = " << fmt_double(c.alpha) << "\n";
    out << "metrics.beta = " << fmt_double(c.beta) << "\n";
    return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
    const std::string s = config_to_string(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace aed
