#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fplab/net.hpp"
#include "fplab/tensor.hpp"

namespace fplab {

struct Dataset {
    std::vector<Tensor> images;  // pixel range [0, 1]
    std::vector<int> labels;
    int num_classes = 0;
    std::string name;

    int size() const { return static_cast<int>(images.size()); }
};

// Parses big-endian IDX containers: image magic 0x00000803 with dims
// (n, rows, cols), label magic 0x00000801 with dim (n). Pixel p maps to
// exactly p/255. limit < 0 keeps everything; limit 0 is a valid empty set.
Dataset load_idx(const std::string& images_path, const std::string& labels_path, long limit = -1);

// Seeded Gaussian clusters clipped to [0,1]^dim; separation scales the
// distance between class centers (0 makes classes indistinguishable).
Dataset synth_blobs(std::uint64_t seed, int num_classes, int per_class, int dim,
                    double separation);

// Deterministic desk fixture: grows a small-image dataset to `count` samples
// at side x side resolution by bilinear upsampling with seeded subpixel
// shifts and additive noise. Sample i derives from source image i % n.
Dataset upsample_augment(const Dataset& source, std::uint64_t seed, int count, int side);

Dataset slice(const Dataset& d, int from, int to);

// Weights persistence: a key-value text manifest at `path` describing the
// architecture plus byte offsets into `path`.bin, which holds every layer's
// row-major float32 data little-endian.
void save_weights(const Mlp& model, const std::string& path);
Mlp load_weights(const std::string& path);

// Atomic text write (temp file + rename). Used for reports and curves.
void write_text_atomic(const std::string& path, const std::string& content);

inline constexpr const char* kCurveCsvHeader =
    "t,g,delta_sup_16,delta_sup_32,delta_sup_64,t_star_marker";

struct CurveTable {
    std::vector<double> t;
    std::vector<double> g;
    std::array<std::vector<double>, 3> delta_sup;  // 16-, 32-, 64-bit bounds
    std::vector<double> t_star_marker;             // t* on marked rows, else 0
};

void write_curve_csv(const std::string& path, const CurveTable& table);

}  // namespace fplab
