#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fedae/binio.hpp"
#include "fedae/data.hpp"
#include "fedae/errors.hpp"
#include "support/helpers.hpp"

using namespace fedae;
using namespace testsupport;

namespace {

std::vector<float> row_of(const LabeledDataset& ds, std::size_t i) {
    const auto span = ds.inputs.row_span(i);
    return {span.begin(), span.end()};
}

/// Multiset of (input row, label) pairs for disjoint/exhaustive checks.
std::vector<std::vector<float>> tagged_rows(const LabeledDataset& ds) {
    std::vector<std::vector<float>> rows;
    rows.reserve(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<float> row = row_of(ds, i);
        row.push_back(static_cast<float>(ds.label_of(i)));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

TEST_CASE("gen_blobs produces balanced one-hot classes deterministically") {
    const LabeledDataset ds = gen_blobs(20, 6, 4, 0.1f, 42);
    CHECK(ds.size() == 20);
    CHECK(ds.dim() == 6);
    CHECK(ds.classes() == 4);
    CHECK(ds.layout == ChannelLayout::flat);

    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.label_of(i) == i % 4); // round-robin class assignment
        float sum = 0.0f;
        for (float v : ds.targets.row_span(i)) sum += v;
        CHECK(sum == 1.0f);
    }

    const LabeledDataset same = gen_blobs(20, 6, 4, 0.1f, 42);
    CHECK(ds.inputs.values() == same.inputs.values());
    const LabeledDataset other = gen_blobs(20, 6, 4, 0.1f, 43);
    CHECK(ds.inputs.values() != other.inputs.values());
}

TEST_CASE("gen_blobs keeps same-class rows near their cluster center") {
    // with zero spread every row equals its class center exactly
    const LabeledDataset tight = gen_blobs(8, 5, 2, 0.0f, 7);
    CHECK(row_of(tight, 0) == row_of(tight, 2));
    CHECK(row_of(tight, 1) == row_of(tight, 3));
    CHECK(row_of(tight, 0) != row_of(tight, 1));
}

TEST_CASE("gen_blobs validates its arguments") {
    CHECK_THROWS_AS(gen_blobs(10, 4, 1, 0.1f, 0), ConfigError);
    CHECK_THROWS_AS(gen_blobs(1, 4, 2, 0.1f, 0), ConfigError);
    CHECK_THROWS_AS(gen_blobs(10, 0, 2, 0.1f, 0), ConfigError);
    CHECK_THROWS_AS(gen_blobs(10, 4, 2, -0.5f, 0), ConfigError);
}

TEST_CASE("as_rgb_image tags geometry and validates the dimension") {
    LabeledDataset ds = gen_blobs(6, 2 * 2 * 3, 2, 0.05f, 1);
    const LabeledDataset img = as_rgb_image(ds, 2, 2);
    CHECK(img.layout == ChannelLayout::rgb);
    CHECK(img.height == 2);
    CHECK(img.width == 2);
    CHECK(img.dim() == 12);

    LabeledDataset bad = gen_blobs(6, 10, 2, 0.05f, 1);
    CHECK_THROWS_AS(as_rgb_image(bad, 2, 2), ConfigError);
}

TEST_CASE("to_grayscale replicates luminance across channels") {
    // craft one known pixel per primary color
    LabeledDataset ds;
    ds.inputs = Tensor(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    ds.targets = Tensor(3, 2, {1, 0, 0, 1, 1, 0});
    ds = as_rgb_image(std::move(ds), 1, 1);

    const LabeledDataset gray = to_grayscale(ds);
    CHECK(gray.layout == ChannelLayout::gray);
    CHECK(gray.inputs(0, 0) == doctest::Approx(0.299).epsilon(1e-6));
    CHECK(gray.inputs(1, 0) == doctest::Approx(0.587).epsilon(1e-6));
    CHECK(gray.inputs(2, 0) == doctest::Approx(0.114).epsilon(1e-6));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(gray.inputs(i, 0) == gray.inputs(i, 1));
        CHECK(gray.inputs(i, 1) == gray.inputs(i, 2));
    }
}

TEST_CASE("to_grayscale is stable under repetition and needs an RGB layout") {
    LabeledDataset ds = as_rgb_image(gen_blobs(10, 4 * 4 * 3, 2, 0.1f, 3), 4, 4);
    const LabeledDataset once = to_grayscale(ds);
    LabeledDataset relabeled = once;
    relabeled.layout = ChannelLayout::rgb; // allow a second pass
    const LabeledDataset twice = to_grayscale(relabeled);

    // The luminance weights sum to 1 only up to float rounding, so a second
    // pass reproduces the values approximately, not bit for bit.
    float worst = 0.0f;
    for (std::size_t i = 0; i < once.inputs.size(); ++i) {
        worst = std::max(worst, std::abs(once.inputs.values()[i] - twice.inputs.values()[i]));
    }
    CHECK(worst <= 1e-5f);

    LabeledDataset flat = gen_blobs(4, 6, 2, 0.1f, 4);
    CHECK_THROWS_AS(to_grayscale(flat), ConfigError);
}

TEST_CASE("partition splits disjointly and exhaustively with near-equal sizes") {
    const LabeledDataset ds = gen_blobs(103, 5, 3, 0.2f, 9);
    const std::vector<LabeledDataset> parts = partition(ds, 4, 77);
    REQUIRE(parts.size() == 4);

    // sizes differ by at most one and sum to the whole
    std::size_t total = 0;
    for (const LabeledDataset& p : parts) {
        CHECK(p.size() >= 103 / 4);
        CHECK(p.size() <= 103 / 4 + 1);
        CHECK(p.dim() == ds.dim());
        CHECK(p.classes() == ds.classes());
        total += p.size();
    }
    CHECK(total == ds.size());

    // the union of the parts is the original multiset of rows
    std::vector<std::vector<float>> original = tagged_rows(ds);
    std::vector<std::vector<float>> combined;
    for (const LabeledDataset& p : parts) {
        std::vector<std::vector<float>> rows = tagged_rows(p);
        combined.insert(combined.end(), rows.begin(), rows.end());
    }
    std::sort(original.begin(), original.end());
    std::sort(combined.begin(), combined.end());
    CHECK(original == combined);
}

TEST_CASE("partition is deterministic and validates the part count") {
    const LabeledDataset ds = gen_blobs(10, 3, 2, 0.1f, 5);
    const auto a = partition(ds, 3, 1);
    const auto b = partition(ds, 3, 1);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a[i].inputs.values() == b[i].inputs.values());
    }
    const auto c = partition(ds, 3, 2);
    CHECK((a[0].inputs.values() != c[0].inputs.values() ||
           a[1].inputs.values() != c[1].inputs.values()));

    CHECK_THROWS_AS(partition(ds, 0, 1), ConfigError);
    CHECK_THROWS_AS(partition(ds, 11, 1), ConfigError);
}

TEST_CASE("IDX ingestion scales pixels and one-hot encodes labels") {
    TempDir dir("idx");
    const auto images_path = dir / "images.idx";
    const auto labels_path = dir / "labels.idx";

    // two 2x2 images, big-endian headers
    {
        std::ofstream out(images_path, std::ios::binary);
        const unsigned char header[] = {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2};
        out.write(reinterpret_cast<const char*>(header), sizeof(header));
        const unsigned char pixels[] = {0, 51, 102, 153, 204, 255, 0, 128};
        out.write(reinterpret_cast<const char*>(pixels), sizeof(pixels));
    }
    {
        std::ofstream out(labels_path, std::ios::binary);
        const unsigned char header[] = {0, 0, 8, 1, 0, 0, 0, 2};
        out.write(reinterpret_cast<const char*>(header), sizeof(header));
        const unsigned char labels[] = {2, 0};
        out.write(reinterpret_cast<const char*>(labels), sizeof(labels));
    }

    const LabeledDataset ds = load_idx(images_path, labels_path);
    CHECK(ds.size() == 2);
    CHECK(ds.dim() == 4);
    CHECK(ds.classes() == 3); // max label 2 -> 3 classes
    CHECK(ds.inputs(0, 0) == 0.0f);
    CHECK(ds.inputs(0, 1) == doctest::Approx(51.0 / 255.0).epsilon(1e-6));
    CHECK(ds.inputs(1, 1) == 1.0f);
    CHECK(ds.label_of(0) == 2);
    CHECK(ds.label_of(1) == 0);
}

TEST_CASE("IDX ingestion rejects malformed pairs") {
    TempDir dir("idx-bad");
    const auto images_path = dir / "images.idx";
    const auto labels_path = dir / "labels.idx";

    auto write_images = [&](std::uint32_t magic, std::uint32_t count) {
        std::ofstream out(images_path, std::ios::binary);
        BinaryWriter w(out);
        // IDX integers are big-endian; emit by hand
        for (std::uint32_t v : {magic, count, 1u, 1u}) {
            out.put(static_cast<char>((v >> 24) & 0xFF));
            out.put(static_cast<char>((v >> 16) & 0xFF));
            out.put(static_cast<char>((v >> 8) & 0xFF));
            out.put(static_cast<char>(v & 0xFF));
        }
        for (std::uint32_t i = 0; i < count; ++i) w.u8(100);
    };
    auto write_labels = [&](std::uint32_t magic, std::uint32_t count) {
        std::ofstream out(labels_path, std::ios::binary);
        BinaryWriter w(out);
        for (std::uint32_t v : {magic, count}) {
            out.put(static_cast<char>((v >> 24) & 0xFF));
            out.put(static_cast<char>((v >> 16) & 0xFF));
            out.put(static_cast<char>((v >> 8) & 0xFF));
            out.put(static_cast<char>(v & 0xFF));
        }
        for (std::uint32_t i = 0; i < count; ++i) w.u8(0);
    };

    write_images(0x00000803, 2);
    write_labels(0x00000801, 2);
    CHECK_NOTHROW(load_idx(images_path, labels_path));

    write_images(0x00000802, 2); // wrong image magic
    CHECK_THROWS_AS(load_idx(images_path, labels_path), ParseError);

    write_images(0x00000803, 2);
    write_labels(0x00000802, 2); // wrong label magic
    CHECK_THROWS_AS(load_idx(images_path, labels_path), ParseError);

    write_labels(0x00000801, 3); // count mismatch
    CHECK_THROWS_AS(load_idx(images_path, labels_path), ParseError);

    CHECK_THROWS_AS(load_idx(dir / "missing.idx", labels_path), IoError);
}

TEST_CASE("FWDA files round-trip datasets and reject corruption") {
    TempDir dir("fwda");
    const auto path = dir / "part.fwda";
    const LabeledDataset ds = gen_blobs(12, 5, 3, 0.2f, 21);
    save_fwda(path, ds);

    const LabeledDataset back = load_fwda(path);
    CHECK(back.size() == ds.size());
    CHECK(back.dim() == ds.dim());
    CHECK(back.classes() == ds.classes());
    CHECK(back.inputs.values() == ds.inputs.values());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.label_of(i) == ds.label_of(i));
    }

    // rewriting the loaded dataset reproduces the bytes
    const std::string once = read_file_bytes(path);
    save_fwda(path, back);
    CHECK(read_file_bytes(path) == once);

    SUBCASE("bad magic") {
        std::string bad = once;
        bad[0] = 'X';
        write_file_bytes(path, bad);
        CHECK_THROWS_AS(load_fwda(path), ParseError);
    }
    SUBCASE("truncated") {
        write_file_bytes(path, once.substr(0, once.size() - 2));
        CHECK_THROWS_AS(load_fwda(path), ParseError);
    }
    SUBCASE("label out of range") {
        std::string bad = once;
        bad[bad.size() - 1] = 9; // last label byte, k is 3
        write_file_bytes(path, bad);
        CHECK_THROWS_AS(load_fwda(path), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_fwda(dir / "absent.fwda"), IoError);
    }
}
