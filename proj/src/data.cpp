#include "fplab/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fplab {

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw std::runtime_error("truncated file: " + path);
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return in;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, long limit) {
    std::ifstream img_in = open_binary(images_path);
    const std::uint32_t img_magic = read_be32(img_in, images_path);
    if (img_magic != 0x00000803u) {
        throw std::runtime_error("unexpected magic in image file " + images_path);
    }
    const std::uint32_t n_img = read_be32(img_in, images_path);
    const std::uint32_t rows = read_be32(img_in, images_path);
    const std::uint32_t cols = read_be32(img_in, images_path);

    std::ifstream lbl_in = open_binary(labels_path);
    const std::uint32_t lbl_magic = read_be32(lbl_in, labels_path);
    if (lbl_magic != 0x00000801u) {
        throw std::runtime_error("unexpected magic in label file " + labels_path);
    }
    const std::uint32_t n_lbl = read_be32(lbl_in, labels_path);
    if (n_img != n_lbl) {
        throw std::runtime_error("count mismatch between " + images_path + " and " + labels_path);
    }

    std::uint32_t n = n_img;
    if (limit >= 0) n = std::min<std::uint32_t>(n, static_cast<std::uint32_t>(limit));

    Dataset d;
    d.name = "idx";
    const size_t pixels = static_cast<size_t>(rows) * cols;
    std::vector<unsigned char> raw(pixels);
    int max_label = -1;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!img_in.read(reinterpret_cast<char*>(raw.data()), pixels)) {
            throw std::runtime_error("truncated file: " + images_path);
        }
        Tensor t;
        t.shape = {static_cast<int>(rows), static_cast<int>(cols)};
        t.data.resize(pixels);
        for (size_t p = 0; p < pixels; ++p) t.data[p] = raw[p] / 255.0f;
        d.images.push_back(std::move(t));

        unsigned char lbl;
        if (!lbl_in.read(reinterpret_cast<char*>(&lbl), 1)) {
            throw std::runtime_error("truncated file: " + labels_path);
        }
        d.labels.push_back(lbl);
        max_label = std::max(max_label, static_cast<int>(lbl));
    }
    d.num_classes = std::max(max_label + 1, 10);
    return d;
}

Dataset synth_blobs(std::uint64_t seed, int num_classes, int per_class, int dim,
                    double separation) {
    if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
    if (per_class < 1) throw std::invalid_argument("need at least 1 sample per class");

    if (num_classes > 2 * dim) {
        throw std::invalid_argument("synth_blobs supports at most 2*dim classes");
    }

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    // Class centers sit on signed coordinate axes at distance `separation`,
    // so any two centers are at least separation apart.
    std::vector<std::vector<double>> centers(num_classes, std::vector<double>(dim, 0.0));
    for (int k = 0; k < num_classes; ++k) {
        centers[k][k % dim] = (k < dim ? separation : -separation);
    }

    // Fixed affine map into [0,1] keeps class geometry linear.
    const double scale = 1.0 / (2.0 * (separation + 4.0));

    Dataset d;
    d.name = "synth";
    d.num_classes = num_classes;
    for (int k = 0; k < num_classes; ++k) {
        for (int s = 0; s < per_class; ++s) {
            Tensor t;
            t.shape = {dim};
            t.data.resize(dim);
            for (int i = 0; i < dim; ++i) {
                const double v = 0.5 + (centers[k][i] + unit(gen)) * scale;
                t.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
            d.images.push_back(std::move(t));
            d.labels.push_back(k);
        }
    }
    return d;
}

Dataset upsample_augment(const Dataset& source, std::uint64_t seed, int count, int side) {
    if (source.size() == 0) throw std::invalid_argument("empty source dataset");
    if (side < 8) throw std::invalid_argument("target side too small");

    const int src_rows = source.images[0].shape[0];
    const int src_cols = source.images[0].shape[1];
    const int patch = side - 6;  // leave room for +/-2 px jitter plus a border

    Dataset d;
    d.name = source.name + "-up" + std::to_string(side);
    d.num_classes = source.num_classes;
    d.images.reserve(count);
    d.labels.reserve(count);

    for (int s = 0; s < count; ++s) {
        const Tensor& src = source.images[s % source.size()];
        std::mt19937 gen(static_cast<std::uint32_t>(seed * 0x9E3779B9u + s));
        std::uniform_int_distribution<int> jitter(-2, 2);
        std::normal_distribution<float> noise(0.0f, 0.05f);
        const int off_r = 3 + jitter(gen);
        const int off_c = 3 + jitter(gen);

        Tensor t;
        t.shape = {side, side};
        t.data.assign(static_cast<size_t>(side) * side, 0.0f);
        for (int r = 0; r < patch; ++r) {
            for (int c = 0; c < patch; ++c) {
                // Bilinear sample of the source grid.
                const float u = (r + 0.5f) * src_rows / patch - 0.5f;
                const float v = (c + 0.5f) * src_cols / patch - 0.5f;
                const int r0 = std::clamp(static_cast<int>(std::floor(u)), 0, src_rows - 1);
                const int c0 = std::clamp(static_cast<int>(std::floor(v)), 0, src_cols - 1);
                const int r1 = std::min(r0 + 1, src_rows - 1);
                const int c1 = std::min(c0 + 1, src_cols - 1);
                const float fr = std::clamp(u - r0, 0.0f, 1.0f);
                const float fc = std::clamp(v - c0, 0.0f, 1.0f);
                const float val =
                    (1 - fr) * ((1 - fc) * src.data[r0 * src_cols + c0] +
                                fc * src.data[r0 * src_cols + c1]) +
                    fr * ((1 - fc) * src.data[r1 * src_cols + c0] +
                          fc * src.data[r1 * src_cols + c1]);
                t.data[(r + off_r) * side + (c + off_c)] = val;
            }
        }
        // Interpolation softens the strokes; push them back toward the
        // saturated range before adding pixel noise.
        for (float& v : t.data) {
            v = std::clamp(std::clamp(2.0f * v, 0.0f, 1.0f) + noise(gen), 0.0f, 1.0f);
        }
        d.images.push_back(std::move(t));
        d.labels.push_back(source.labels[s % source.size()]);
    }
    return d;
}

Dataset slice(const Dataset& d, int from, int to) {
    if (from < 0 || to > d.size() || from > to) throw std::invalid_argument("bad slice range");
    Dataset out;
    out.name = d.name;
    out.num_classes = d.num_classes;
    out.images.assign(d.images.begin() + from, d.images.begin() + to);
    out.labels.assign(d.labels.begin() + from, d.labels.begin() + to);
    return out;
}

namespace {

void append_le_float(std::string& blob, float v) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    blob.push_back(static_cast<char>(bits & 0xFF));
    blob.push_back(static_cast<char>((bits >> 8) & 0xFF));
    blob.push_back(static_cast<char>((bits >> 16) & 0xFF));
    blob.push_back(static_cast<char>((bits >> 24) & 0xFF));
}

float read_le_float(const std::string& blob, size_t offset) {
    const std::uint32_t bits = (std::uint32_t(static_cast<unsigned char>(blob[offset]))) |
                               (std::uint32_t(static_cast<unsigned char>(blob[offset + 1])) << 8) |
                               (std::uint32_t(static_cast<unsigned char>(blob[offset + 2])) << 16) |
                               (std::uint32_t(static_cast<unsigned char>(blob[offset + 3])) << 24);
    return std::bit_cast<float>(bits);
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::string basename_of(const std::string& path) {
    const size_t pos = path.find_last_of('/');
    return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + path);
        out << content;
        if (!out) {
            std::remove(tmp.c_str());
            throw std::runtime_error("write failed: " + path);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("rename failed: " + path);
    }
}

void save_weights(const Mlp& model, const std::string& path) {
    std::string blob;
    std::ostringstream manifest;
    manifest << "format: mlp-weights-v1\n";
    manifest << "widths: " << join_ints(model.widths) << "\n";
    manifest << "activations: ";
    for (size_t i = 0; i < model.activations.size(); ++i) {
        if (i) manifest << ',';
        manifest << model.activations[i];
    }
    manifest << "\n";
    manifest << "seed: " << model.seed << "\n";
    manifest << "precision: 32\n";
    manifest << "blob: " << basename_of(path) << ".bin\n";

    for (int l = 0; l < model.num_layers(); ++l) {
        manifest << "layer" << l << ".weight.offset: " << blob.size() << "\n";
        manifest << "layer" << l << ".weight.count: " << model.weights[l].size() << "\n";
        for (float v : model.weights[l]) append_le_float(blob, v);
        manifest << "layer" << l << ".bias.offset: " << blob.size() << "\n";
        manifest << "layer" << l << ".bias.count: " << model.biases[l].size() << "\n";
        for (float v : model.biases[l]) append_le_float(blob, v);
    }

    write_text_atomic(path, manifest.str());
    write_text_atomic(path + ".bin", blob);
}

namespace {

std::string manifest_value(const std::string& text, const std::string& key,
                           const std::string& path) {
    std::istringstream in(text);
    std::string line;
    const std::string prefix = key + ": ";
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    }
    throw std::runtime_error("missing manifest key '" + key + "' in " + path);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

}  // namespace

Mlp load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open weights manifest: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string manifest = ss.str();

    if (manifest_value(manifest, "format", path) != "mlp-weights-v1") {
        throw std::runtime_error("unsupported weights format in " + path);
    }

    Mlp m;
    m.widths = parse_int_list(manifest_value(manifest, "widths", path));
    m.seed = std::stoull(manifest_value(manifest, "seed", path));
    {
        std::istringstream acts(manifest_value(manifest, "activations", path));
        std::string tok;
        while (std::getline(acts, tok, ',')) m.activations.push_back(tok);
    }

    const std::string blob_path = path + ".bin";
    std::ifstream blob_in(blob_path, std::ios::binary);
    if (!blob_in) throw std::runtime_error("cannot open weights blob: " + blob_path);
    std::stringstream bs;
    bs << blob_in.rdbuf();
    const std::string blob = bs.str();

    for (size_t l = 0; l + 1 < m.widths.size(); ++l) {
        const std::string tag = "layer" + std::to_string(l);
        const size_t w_off = std::stoull(manifest_value(manifest, tag + ".weight.offset", path));
        const size_t w_cnt = std::stoull(manifest_value(manifest, tag + ".weight.count", path));
        const size_t b_off = std::stoull(manifest_value(manifest, tag + ".bias.offset", path));
        const size_t b_cnt = std::stoull(manifest_value(manifest, tag + ".bias.count", path));
        if (b_off + b_cnt * 4 > blob.size() || w_off + w_cnt * 4 > blob.size()) {
            throw std::runtime_error("weights blob too short: " + blob_path);
        }
        std::vector<float> w(w_cnt), b(b_cnt);
        for (size_t i = 0; i < w_cnt; ++i) w[i] = read_le_float(blob, w_off + 4 * i);
        for (size_t i = 0; i < b_cnt; ++i) b[i] = read_le_float(blob, b_off + 4 * i);
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    return m;
}

void write_curve_csv(const std::string& path, const CurveTable& table) {
    const size_t n = table.t.size();
    if (table.g.size() != n || table.t_star_marker.size() != n ||
        table.delta_sup[0].size() != n || table.delta_sup[1].size() != n ||
        table.delta_sup[2].size() != n) {
        throw std::invalid_argument("curve table columns disagree in length");
    }
    std::ostringstream out;
    out << kCurveCsvHeader << "\n";
    out.precision(12);
    for (size_t i = 0; i < n; ++i) {
        out << table.t[i] << ',' << table.g[i] << ',' << table.delta_sup[0][i] << ','
            << table.delta_sup[1][i] << ',' << table.delta_sup[2][i] << ','
            << table.t_star_marker[i] << "\n";
    }
    write_text_atomic(path, out.str());
}

}  // namespace fplab
