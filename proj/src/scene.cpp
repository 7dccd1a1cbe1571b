#include "aed/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "aed/rng.hpp"

namespace aed::scene {

namespace {

constexpr int kCropSize = 64;
constexpr double kBackground = 0.05;

struct ObjectState {
    int object_id;
    ShapeKind shape;
    int size;
    double intensity;
    int cx, cy;
    int vx, vy;
    int first_frame, last_frame;  // inclusive lifetime
    bool is_anomaly;
};

void reflect_step(ObjectState& o, int frame_w, int frame_h) {
    int ncx = o.cx + o.vx;
    if (ncx - o.size < 0 || ncx + o.size >= frame_w) {
        o.vx = -o.vx;
        ncx = o.cx + o.vx;
    }
    int ncy = o.cy + o.vy;
    if (ncy - o.size < 0 || ncy + o.size >= frame_h) {
        o.vy = -o.vy;
        ncy = o.cy + o.vy;
    }
    o.cx = ncx;
    o.cy = ncy;
}

}  // namespace

ShapeKind shape_from_string(const std::string& s) {
    if (s == "disc") return ShapeKind::Disc;
    if (s == "square") return ShapeKind::Square;
    if (s == "triangle") return ShapeKind::Triangle;
    if (s == "cross") return ShapeKind::Cross;
    throw std::invalid_argument("unknown shape kind: " + s);
}

std::string shape_to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::Disc: return "disc";
        case ShapeKind::Square: return "square";
        case ShapeKind::Triangle: return "triangle";
        case ShapeKind::Cross: return "cross";
    }
    return "?";
}

void SceneConfig::validate() const {
    check(frame_height > 0 && frame_width > 0 && episode_length > 0,
          "SceneConfig: non-positive dimensions");
    check(!normal_kinds.empty(), "SceneConfig: no normal object kinds");
    for (const ObjectKind& k : normal_kinds) {
        check(k.speed_min >= 0 && k.speed_max >= k.speed_min,
              "SceneConfig: invalid speed range");
        check(k.size_min >= 1 && k.size_max >= k.size_min,
              "SceneConfig: invalid size range");
        check(2 * k.size_max + 1 <= frame_width && 2 * k.size_max + 1 <= frame_height,
              "SceneConfig: object does not fit inside the frame");
    }
    for (const AnomalyKind& k : anomaly_kinds)
        check(2 * k.size + 1 <= frame_width && 2 * k.size + 1 <= frame_height,
              "SceneConfig: anomaly object does not fit inside the frame");
}

SceneConfig default_scene_config() {
    SceneConfig c;
    c.normal_kinds = {
        ObjectKind{ShapeKind::Disc, 6, 12, 1, 3, 0.35, 0.95},
        ObjectKind{ShapeKind::Square, 6, 12, 1, 3, 0.35, 0.95},
    };
    c.anomaly_kinds = {
        AnomalyKind{ShapeKind::Cross, 9, 1.0},     // appearance anomaly
        AnomalyKind{ShapeKind::Square, 9, 4.0},    // short-term motion anomaly
    };
    return c;
}

bool shape_contains(ShapeKind shape, int size, int cx, int cy, int px, int py) {
    const int dx = px - cx, dy = py - cy;
    switch (shape) {
        case ShapeKind::Disc:
            return dx * dx + dy * dy <= size * size;
        case ShapeKind::Square:
            return std::abs(dx) <= size && std::abs(dy) <= size;
        case ShapeKind::Triangle:
            // apex up, base down
            return dy >= -size && dy <= size && 2 * std::abs(dx) <= dy + size;
        case ShapeKind::Cross: {
            const int t = std::max(1, size / 3);
            return (std::abs(dx) <= t && std::abs(dy) <= size) ||
                   (std::abs(dy) <= t && std::abs(dx) <= size);
        }
    }
    return false;
}

Episode generate_episode(const SceneConfig& config, bool anomalous) {
    config.validate();
    Rng rng(config.rng_seed);

    std::vector<ObjectState> objects;
    int next_id = 0;
    for (int n = 0; n < config.objects_per_episode; ++n) {
        const ObjectKind& kind =
            config.normal_kinds[rng.uniform_int(0, static_cast<int>(config.normal_kinds.size()) - 1)];
        ObjectState o;
        o.object_id = next_id++;
        o.shape = kind.shape;
        o.size = rng.uniform_int(kind.size_min, kind.size_max);
        o.intensity = rng.uniform(kind.intensity_min, kind.intensity_max);
        o.cx = rng.uniform_int(o.size, config.frame_width - 1 - o.size);
        o.cy = rng.uniform_int(o.size, config.frame_height - 1 - o.size);
        const int s = rng.uniform_int(kind.speed_min, kind.speed_max);
        o.vx = rng.uniform_int(-s, s);
        o.vy = rng.uniform_int(-s, s);
        o.first_frame = 0;
        o.last_frame = config.episode_length - 1;
        o.is_anomaly = false;
        objects.push_back(o);
    }

    if (anomalous) {
        check(!config.anomaly_kinds.empty(),
              "generate_episode: anomalous episode needs anomaly kinds");
        const int t0 = config.episode_length / 4;
        const int t1 = (3 * config.episode_length) / 4;
        for (const AnomalyKind& kind : config.anomaly_kinds) {
            const ObjectKind& base = config.normal_kinds[0];
            ObjectState o;
            o.object_id = next_id++;
            o.shape = kind.shape;
            o.size = kind.size;
            o.intensity = rng.uniform(base.intensity_min, base.intensity_max);
            o.cx = rng.uniform_int(o.size, config.frame_width - 1 - o.size);
            o.cy = rng.uniform_int(o.size, config.frame_height - 1 - o.size);
            const int s = rng.uniform_int(std::max(1, base.speed_min), base.speed_max);
            const int mag = std::max(1, static_cast<int>(std::lround(s * kind.speed_multiplier)));
            const int dir_x = rng.uniform_int(0, 1) ? 1 : -1;
            const int dir_y = rng.uniform_int(0, 1) ? 1 : -1;
            o.vx = dir_x * mag;
            o.vy = dir_y * (rng.uniform_int(0, 1) ? mag : 0);
            o.first_frame = t0;
            o.last_frame = t1;
            o.is_anomaly = true;
            objects.push_back(o);
        }
    }

    Episode ep;
    ep.frame_height = config.frame_height;
    ep.frame_width = config.frame_width;
    ep.frames.reserve(config.episode_length);
    ep.truth.resize(config.episode_length);

    Rng noise_rng = rng.fork(0x6e6f6973ULL);

    for (int t = 0; t < config.episode_length; ++t) {
        Tensor frame({config.frame_height, config.frame_width}, kBackground);
        for (const ObjectState& o : objects) {
            if (t < o.first_frame || t > o.last_frame) continue;
            for (int py = o.cy - o.size; py <= o.cy + o.size; ++py)
                for (int px = o.cx - o.size; px <= o.cx + o.size; ++px)
                    if (shape_contains(o.shape, o.size, o.cx, o.cy, px, py))
                        frame.at(py, px) = std::max(frame.at(py, px), o.intensity);
            TruthRow row;
            row.frame_index = t;
            row.object_id = o.object_id;
            row.box = PixelBox{o.cx - o.size, o.cy - o.size, o.cx + o.size, o.cy + o.size};
            row.shape = o.shape;
            row.size = o.size;
            row.cx = o.cx;
            row.cy = o.cy;
            row.intensity = o.intensity;
            row.is_anomaly = o.is_anomaly;
            ep.truth[t].push_back(row);
        }
        if (config.noise_level > 0.0)
            for (double& v : frame.data)
                v = std::clamp(v + noise_rng.uniform(-config.noise_level,
                                                     config.noise_level),
                               0.0, 1.0);
        ep.frames.push_back(std::move(frame));
        for (ObjectState& o : objects)
            if (t >= o.first_frame && t <= o.last_frame)
                reflect_step(o, config.frame_width, config.frame_height);
    }
    return ep;
}

namespace {

const TruthRow* find_row(const Episode& ep, int frame_index, int object_id) {
    if (frame_index < 0 || frame_index >= static_cast<int>(ep.truth.size()))
        return nullptr;
    for (const TruthRow& r : ep.truth[frame_index])
        if (r.object_id == object_id) return &r;
    return nullptr;
}

/// Nearest-neighbor source index for destination index i of kCropSize.
int nn_src(int i, int src_extent) {
    return (i * src_extent) / kCropSize;
}

Tensor crop_mask(const TruthRow& row) {
    const int bw = row.box.x2 - row.box.x1 + 1;
    const int bh = row.box.y2 - row.box.y1 + 1;
    Tensor mask({kCropSize, kCropSize, 1});
    for (int i = 0; i < kCropSize; ++i) {
        const int sy = row.box.y1 + nn_src(i, bh);
        for (int j = 0; j < kCropSize; ++j) {
            const int sx = row.box.x1 + nn_src(j, bw);
            mask.at(i, j, 0) =
                shape_contains(row.shape, row.size, row.cx, row.cy, sx, sy) ? 1.0 : 0.0;
        }
    }
    return mask;
}

}  // namespace

Displacement object_displacement(const Episode& ep, int frame_index, int object_id,
                                 bool forward) {
    const TruthRow* here = find_row(ep, frame_index, object_id);
    check(here != nullptr, "object_displacement: object not present at frame");
    const int step = forward ? 1 : -1;
    const TruthRow* there = find_row(ep, frame_index + step, object_id);
    if (there == nullptr) {
        // clamped at episode (or track) ends: mirror the opposite neighbor
        const TruthRow* opposite = find_row(ep, frame_index - step, object_id);
        if (opposite == nullptr) return Displacement{0, 0};
        return Displacement{here->cx - opposite->cx, here->cy - opposite->cy};
    }
    return Displacement{there->cx - here->cx, there->cy - here->cy};
}

Tensor compute_flow(const Episode& ep, int frame_index, const TruthRow& row,
                    bool forward) {
    const Displacement d = object_displacement(ep, frame_index, row.object_id, forward);
    const double mag = std::hypot(static_cast<double>(d.dx), static_cast<double>(d.dy));
    const double ori = (d.dx == 0 && d.dy == 0)
                           ? 0.0
                           : std::atan2(static_cast<double>(d.dy),
                                        static_cast<double>(d.dx));
    Tensor mask = crop_mask(row);
    Tensor flow({kCropSize, kCropSize, 2});
    for (int i = 0; i < kCropSize; ++i)
        for (int j = 0; j < kCropSize; ++j)
            if (mask.at(i, j, 0) > 0.0) {
                flow.at(i, j, 0) = ori;
                flow.at(i, j, 1) = mag;
            }
    return flow;
}

std::vector<Tensor> compute_flow(const Episode& ep, int frame_index, bool forward) {
    check(frame_index >= 0 && frame_index < static_cast<int>(ep.truth.size()),
          "compute_flow: frame index out of range");
    std::vector<Tensor> flows;
    for (const TruthRow& row : ep.truth[frame_index])
        flows.push_back(compute_flow(ep, frame_index, row, forward));
    return flows;
}

std::vector<ObjectSample> extract_samples(const Episode& ep, int* skipped_degenerate) {
    int skipped = 0;
    std::vector<ObjectSample> samples;
    for (int t = 0; t < static_cast<int>(ep.truth.size()); ++t) {
        for (const TruthRow& row : ep.truth[t]) {
            const int bw = row.box.x2 - row.box.x1 + 1;
            const int bh = row.box.y2 - row.box.y1 + 1;
            if (bw <= 0 || bh <= 0) {
                ++skipped;
                continue;
            }
            check(row.box.x1 >= 0 && row.box.y1 >= 0 && row.box.x2 < ep.frame_width &&
                      row.box.y2 < ep.frame_height,
                  "extract_samples: box outside frame");
            ObjectSample s;
            s.frame_index = t;
            s.box = row.box;
            s.appearance = Tensor({kCropSize, kCropSize, 1});
            for (int i = 0; i < kCropSize; ++i) {
                const int sy = row.box.y1 + nn_src(i, bh);
                for (int j = 0; j < kCropSize; ++j) {
                    const int sx = row.box.x1 + nn_src(j, bw);
                    s.appearance.at(i, j, 0) = ep.frames[t].at(sy, sx);
                }
            }
            s.mask = crop_mask(row);
            s.flow_backward = compute_flow(ep, t, row, false);
            s.flow_forward = compute_flow(ep, t, row, true);
            samples.push_back(std::move(s));
        }
    }
    if (skipped_degenerate) *skipped_degenerate = skipped;
    return samples;
}

namespace {

Tensor texture_checkerboard(Rng& rng) {
    Tensor img({kCropSize, kCropSize, 1});
    const int cell = rng.uniform_int(4, 12);
    const int phase_x = rng.uniform_int(0, cell - 1);
    const int phase_y = rng.uniform_int(0, cell - 1);
    const double a = rng.uniform(0.0, 0.45), b = rng.uniform(0.55, 1.0);
    for (int i = 0; i < kCropSize; ++i)
        for (int j = 0; j < kCropSize; ++j) {
            const bool on = (((i + phase_y) / cell) + ((j + phase_x) / cell)) % 2 == 0;
            img.at(i, j, 0) = on ? a : b;
        }
    return img;
}

Tensor texture_value_noise(Rng& rng) {
    // bilinear interpolation of a coarse random grid
    const int grid = rng.uniform_int(4, 9);
    std::vector<double> nodes(static_cast<std::size_t>((grid + 1) * (grid + 1)));
    for (double& v : nodes) v = rng.next_double();
    Tensor img({kCropSize, kCropSize, 1});
    for (int i = 0; i < kCropSize; ++i)
        for (int j = 0; j < kCropSize; ++j) {
            const double gy = static_cast<double>(i) * grid / (kCropSize - 1);
            const double gx = static_cast<double>(j) * grid / (kCropSize - 1);
            const int y0 = std::min(static_cast<int>(gy), grid - 1);
            const int x0 = std::min(static_cast<int>(gx), grid - 1);
            const double fy = gy - y0, fx = gx - x0;
            const double v00 = nodes[y0 * (grid + 1) + x0];
            const double v01 = nodes[y0 * (grid + 1) + x0 + 1];
            const double v10 = nodes[(y0 + 1) * (grid + 1) + x0];
            const double v11 = nodes[(y0 + 1) * (grid + 1) + x0 + 1];
            img.at(i, j, 0) = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                              fy * ((1 - fx) * v10 + fx * v11);
        }
    return img;
}

Tensor texture_stripes(Rng& rng) {
    Tensor img({kCropSize, kCropSize, 1});
    const int width = rng.uniform_int(3, 10);
    const int mode = rng.uniform_int(0, 2);  // horizontal, vertical, diagonal
    const double a = rng.uniform(0.0, 0.45), b = rng.uniform(0.55, 1.0);
    for (int i = 0; i < kCropSize; ++i)
        for (int j = 0; j < kCropSize; ++j) {
            const int coord = mode == 0 ? i : (mode == 1 ? j : i + j);
            img.at(i, j, 0) = (coord / width) % 2 == 0 ? a : b;
        }
    return img;
}

Tensor texture_blobs(Rng& rng) {
    Tensor img({kCropSize, kCropSize, 1}, rng.uniform(0.1, 0.4));
    const int blobs = rng.uniform_int(6, 14);
    for (int n = 0; n < blobs; ++n) {
        const int r = rng.uniform_int(3, 10);
        const int cx = rng.uniform_int(0, kCropSize - 1);
        const int cy = rng.uniform_int(0, kCropSize - 1);
        const double v = rng.next_double();
        for (int i = std::max(0, cy - r); i <= std::min(kCropSize - 1, cy + r); ++i)
            for (int j = std::max(0, cx - r); j <= std::min(kCropSize - 1, cx + r); ++j)
                if ((i - cy) * (i - cy) + (j - cx) * (j - cx) <= r * r)
                    img.at(i, j, 0) = v;
    }
    return img;
}

}  // namespace

std::vector<Tensor> make_pseudo_abnormal_appearance(const PseudoAbnormalConfig& config,
                                                    int n, std::uint64_t seed) {
    check(n >= 0, "make_pseudo_abnormal_appearance: negative count");
    check(n <= config.pool_size,
          "make_pseudo_abnormal_appearance: requested more than the pool size");
    check(!config.texture_kinds.empty(),
          "make_pseudo_abnormal_appearance: no texture kinds configured");
    Rng rng(seed);
    std::vector<Tensor> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const TextureKind kind =
            config.texture_kinds[static_cast<std::size_t>(i) % config.texture_kinds.size()];
        switch (kind) {
            case TextureKind::Checkerboard: pool.push_back(texture_checkerboard(rng)); break;
            case TextureKind::ValueNoise: pool.push_back(texture_value_noise(rng)); break;
            case TextureKind::Stripes: pool.push_back(texture_stripes(rng)); break;
            case TextureKind::Blobs: pool.push_back(texture_blobs(rng)); break;
        }
    }
    return pool;
}

Tensor magnify_flow(const Tensor& stride1_flow, int k) {
    check(k > 0, "magnify_flow: stride must be positive");
    Tensor out = stride1_flow;
    const int h = out.dim(0), w = out.dim(1);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) out.at(i, j, 1) *= static_cast<double>(k);
    return out;
}

std::vector<Tensor> make_pseudo_abnormal_flow(const Episode& ep, int k, bool forward) {
    check(k > 0, "make_pseudo_abnormal_flow: stride must be positive");
    std::vector<Tensor> flows;
    for (int t = 0; t < static_cast<int>(ep.truth.size()); ++t)
        for (const TruthRow& row : ep.truth[t])
            flows.push_back(magnify_flow(compute_flow(ep, t, row, forward), k));
    return flows;
}

void write_annotations(const Episode& ep, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_annotations: cannot open " + path.string());
    out << "frame_idx,track_id,x1,y1,x2,y2\n";
    for (const auto& frame_rows : ep.truth)
        for (const TruthRow& row : frame_rows)
            if (row.is_anomaly)
                out << row.frame_index << ',' << row.object_id << ',' << row.box.x1
                    << ',' << row.box.y1 << ',' << row.box.x2 << ',' << row.box.y2
                    << '\n';
    if (!out) throw std::runtime_error("write_annotations: write failed: " + path.string());
}

void write_pgm(const Tensor& frame, const std::filesystem::path& path) {
    check(frame.rank() == 2, "write_pgm: frame must be 2-d");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
    out << "P5\n" << frame.dim(1) << ' ' << frame.dim(0) << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(frame.dim(1)));
    for (int i = 0; i < frame.dim(0); ++i) {
        for (int j = 0; j < frame.dim(1); ++j)
            row[j] = static_cast<unsigned char>(
                std::clamp(std::lround(frame.at(i, j) * 255.0), 0L, 255L));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write_pgm: write failed: " + path.string());
}

Tensor read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || maxval != 255)
        throw std::runtime_error("read_pgm: unsupported format in " + path.string());
    in.get();  // single whitespace after header
    Tensor frame({h, w});
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (int i = 0; i < h; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw std::runtime_error("read_pgm: truncated file " + path.string());
        for (int j = 0; j < w; ++j) frame.at(i, j) = row[j] / 255.0;
    }
    return frame;
}

void write_episode(const Episode& ep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    char name[32];
    for (int t = 0; t < static_cast<int>(ep.frames.size()); ++t) {
        std::snprintf(name, sizeof(name), "frame_%06d.pgm", t);
        write_pgm(ep.frames[t], dir / name);
    }
    write_annotations(ep, dir / "tracks.csv");
}

}  // namespace aed::scene
