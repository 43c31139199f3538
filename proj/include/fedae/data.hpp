#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fedae/tensor.hpp"

namespace fedae {

enum class ChannelLayout : std::uint8_t { flat = 0, rgb = 1, gray = 2 };

/// Supervised dataset with one-hot targets. Image layouts store pixels
/// row-major with interleaved channels: index = (y*width + x)*3 + channel.
struct LabeledDataset {
    Tensor inputs;   // n x d
    Tensor targets;  // n x k, one-hot rows
    ChannelLayout layout = ChannelLayout::flat;
    std::uint32_t height = 0;
    std::uint32_t width = 0;

    std::size_t size() const { return inputs.rows(); }
    std::size_t dim() const { return inputs.cols(); }
    std::size_t classes() const { return targets.cols(); }
    std::size_t label_of(std::size_t row) const;
};

/// k seeded Gaussian clusters in [0,1]^d with balanced classes (row i gets
/// class i mod k). spread is the per-component noise sigma.
LabeledDataset gen_blobs(std::size_t n, std::size_t d, std::size_t k,
                         float spread, std::uint64_t seed);

/// Tags a flat dataset as h x w x 3 interleaved RGB (d must equal h*w*3).
LabeledDataset as_rgb_image(LabeledDataset ds, std::uint32_t height, std::uint32_t width);

/// Replaces every pixel by its luminance 0.299 R + 0.587 G + 0.114 B,
/// replicated across the three channels so the dimension is preserved.
LabeledDataset to_grayscale(const LabeledDataset& ds);

/// Disjoint IID split into n_parts shuffled parts with sizes differing by
/// at most one; the union of the parts is the original multiset of rows.
std::vector<LabeledDataset> partition(const LabeledDataset& ds, std::size_t n_parts,
                                      std::uint64_t seed);

/// IDX ingestion (big-endian magics 0x00000803 images / 0x00000801 labels).
/// Pixels are scaled to [0,1], labels become one-hot rows.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

// FWDA dataset file: "FWDA", u32 n, u32 d, u32 k, n*d little-endian f32
// inputs, then n u8 class labels.
void save_fwda(const std::filesystem::path& path, const LabeledDataset& ds);
LabeledDataset load_fwda(const std::filesystem::path& path);

} // namespace fedae
