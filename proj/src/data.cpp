#include "fedae/data.hpp"

#include <algorithm>
#include <fstream>

#include "fedae/binio.hpp"
#include "fedae/errors.hpp"
#include "fedae/rng.hpp"

namespace fedae {

std::size_t LabeledDataset::label_of(std::size_t row) const {
    const auto span = targets.row_span(row);
    for (std::size_t i = 0; i < span.size(); ++i) {
        if (span[i] == 1.0f) return i;
    }
    throw CodecError("row " + std::to_string(row) + " has no one-hot label");
}

LabeledDataset gen_blobs(std::size_t n, std::size_t d, std::size_t k,
                         float spread, std::uint64_t seed) {
    if (k < 2) throw ConfigError("gen_blobs needs at least 2 classes");
    if (n < k) throw ConfigError("gen_blobs needs at least one sample per class");
    if (d == 0) throw ConfigError("gen_blobs needs a positive dimension");
    if (spread < 0.0f) throw ConfigError("spread must be nonnegative");

    Rng rng(seed);
    Tensor centers(k, d);
    for (float& v : centers.values()) v = static_cast<float>(rng.uniform());

    LabeledDataset ds;
    ds.inputs = Tensor(n, d);
    ds.targets = Tensor(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t label = i % k;
        float* row = ds.inputs.data() + i * d;
        const float* center = centers.data() + label * d;
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = center[j] + spread * static_cast<float>(rng.gaussian());
        }
        ds.targets(i, label) = 1.0f;
    }
    return ds;
}

LabeledDataset as_rgb_image(LabeledDataset ds, std::uint32_t height, std::uint32_t width) {
    if (ds.dim() != static_cast<std::size_t>(height) * width * 3) {
        throw ConfigError("dataset dim " + std::to_string(ds.dim()) + " does not equal " +
                          std::to_string(height) + "x" + std::to_string(width) + "x3");
    }
    ds.layout = ChannelLayout::rgb;
    ds.height = height;
    ds.width = width;
    return ds;
}

LabeledDataset to_grayscale(const LabeledDataset& ds) {
    if (ds.layout != ChannelLayout::rgb) {
        throw ConfigError("to_grayscale expects an RGB dataset");
    }
    LabeledDataset out = ds;
    out.layout = ChannelLayout::gray;
    const std::size_t pixels = ds.dim() / 3;
    for (std::size_t i = 0; i < out.size(); ++i) {
        float* row = out.inputs.data() + i * out.dim();
        for (std::size_t p = 0; p < pixels; ++p) {
            float* px = row + p * 3;
            const float lum = 0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2];
            px[0] = px[1] = px[2] = lum;
        }
    }
    return out;
}

std::vector<LabeledDataset> partition(const LabeledDataset& ds, std::size_t n_parts,
                                      std::uint64_t seed) {
    if (n_parts == 0 || n_parts > ds.size()) {
        throw ConfigError("partition count must be in [1, dataset size]");
    }
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const std::size_t n = ds.size();
    const std::size_t base = n / n_parts;
    const std::size_t extra = n % n_parts; // first `extra` parts take one more row

    std::vector<LabeledDataset> parts;
    parts.reserve(n_parts);
    std::size_t cursor = 0;
    for (std::size_t p = 0; p < n_parts; ++p) {
        const std::size_t rows = base + (p < extra ? 1 : 0);
        LabeledDataset part;
        part.layout = ds.layout;
        part.height = ds.height;
        part.width = ds.width;
        part.inputs = Tensor(rows, ds.dim());
        part.targets = Tensor(rows, ds.classes());
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t src = order[cursor++];
            std::copy_n(ds.inputs.data() + src * ds.dim(), ds.dim(),
                        part.inputs.data() + r * ds.dim());
            std::copy_n(ds.targets.data() + src * ds.classes(), ds.classes(),
                        part.targets.data() + r * ds.classes());
        }
        parts.push_back(std::move(part));
    }
    return parts;
}

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw IoError("cannot open " + images_path.string());
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw IoError("cannot open " + labels_path.string());

    BinaryReader ir(images, images_path.filename().string());
    const std::uint32_t image_magic = ir.u32_be();
    if (image_magic != 0x00000803) ir.fail("bad IDX image magic", 0);
    const std::uint32_t count = ir.u32_be();
    const std::uint32_t rows = ir.u32_be();
    const std::uint32_t cols = ir.u32_be();
    if (rows == 0 || cols == 0) ir.fail("zero image dimensions", 8);

    BinaryReader lr(labels, labels_path.filename().string());
    const std::uint32_t label_magic = lr.u32_be();
    if (label_magic != 0x00000801) lr.fail("bad IDX label magic", 0);
    const std::uint32_t label_count = lr.u32_be();
    if (label_count != count) {
        lr.fail("label count " + std::to_string(label_count) + " does not match image count " +
                    std::to_string(count),
                4);
    }

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(count) * dim);
    ir.u8_block(pixels);
    std::vector<std::uint8_t> raw_labels(count);
    lr.u8_block(raw_labels);

    std::uint8_t max_label = 0;
    for (std::uint8_t l : raw_labels) max_label = std::max(max_label, l);
    const std::size_t k = static_cast<std::size_t>(max_label) + 1;

    LabeledDataset ds;
    ds.layout = ChannelLayout::flat;
    ds.inputs = Tensor(count, dim);
    ds.targets = Tensor(count, std::max<std::size_t>(k, 2));
    for (std::size_t i = 0; i < count; ++i) {
        float* row = ds.inputs.data() + i * dim;
        const std::uint8_t* src = pixels.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<float>(src[j]) / 255.0f;
        ds.targets(i, raw_labels[i]) = 1.0f;
    }
    return ds;
}

void save_fwda(const std::filesystem::path& path, const LabeledDataset& ds) {
    if (ds.classes() > 255) throw CodecError("FWDA stores labels as u8 (max 255 classes)");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    BinaryWriter w(out);
    w.magic("FWDA");
    w.u32(static_cast<std::uint32_t>(ds.size()));
    w.u32(static_cast<std::uint32_t>(ds.dim()));
    w.u32(static_cast<std::uint32_t>(ds.classes()));
    w.f32_block(ds.inputs.values());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        w.u8(static_cast<std::uint8_t>(ds.label_of(i)));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

LabeledDataset load_fwda(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    BinaryReader r(in, path.filename().string());
    r.expect_magic("FWDA");
    const std::uint32_t n = r.u32();
    const std::uint32_t d = r.u32();
    const std::uint32_t k = r.u32();
    if (d == 0 || k == 0) r.fail("zero dimensions", 4);

    LabeledDataset ds;
    ds.inputs = Tensor(n, d);
    ds.targets = Tensor(n, k);
    r.f32_block(ds.inputs.values());
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t label = r.u8();
        if (label >= k) r.fail("label " + std::to_string(label) + " out of range", r.offset() - 1);
        ds.targets(i, label) = 1.0f;
    }
    return ds;
}

} // namespace fedae
