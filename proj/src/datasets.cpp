#include "fedmt/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fedmt/errors.hpp"
#include "fedmt/rng.hpp"

namespace fedmt {

namespace {
constexpr uint32_t kImagesMagic = 0x31474D49;  // "IMG1"
constexpr uint32_t kLabelsMagic = 0x314C424C;  // "LBL1"
}

Tensor LabeledImageSet::sample(uint32_t index) const {
    const std::size_t pixels = static_cast<std::size_t>(height()) * width();
    std::vector<float> data(images.data() + index * pixels,
                            images.data() + (index + 1) * pixels);
    return Tensor({1, 1, height(), width()}, std::move(data));
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "blob") return TaskKind::blob;
    if (s == "ring") return TaskKind::ring;
    throw DomainError("unknown task kind '" + s + "' (expected blob or ring)");
}

LabeledImageSet gen_synthetic_task(TaskKind kind, uint32_t n, uint32_t hw,
                                   double positive_rate, double noise_sigma, uint64_t seed,
                                   std::string task_name) {
    if (hw % 8 != 0) throw DomainError("image size must be divisible by 8");
    if (positive_rate <= 0.0 || positive_rate >= 1.0) {
        throw DomainError("positive-rate must lie strictly between 0 and 1");
    }
    if (n == 0) throw DomainError("sample count must be positive");

    Rng rng(seed);
    LabeledImageSet out;
    out.task_name = std::move(task_name);
    out.images = Tensor({n, 1, hw, hw});
    out.labels.resize(n);
    const double size = static_cast<double>(hw);

    for (uint32_t i = 0; i < n; ++i) {
        float* img = out.images.data() + static_cast<std::size_t>(i) * hw * hw;
        const bool positive = rng.uniform() < positive_rate;
        out.labels[i] = positive ? 1 : 0;

        for (uint32_t p = 0; p < hw * hw; ++p) {
            const double v = noise_sigma * std::fabs(rng.normal());
            img[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
        if (!positive) continue;

        const double margin = size / 4.0;
        const double cx = rng.uniform(margin, size - margin);
        const double cy = rng.uniform(margin, size - margin);
        const double amplitude = rng.uniform(0.6, 1.0);
        if (kind == TaskKind::blob) {
            const double radius = rng.uniform(size / 8.0, size / 5.0);
            for (uint32_t y = 0; y < hw; ++y)
                for (uint32_t x = 0; x < hw; ++x) {
                    const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    const double v = amplitude * std::exp(-d2 / (2.0 * radius * radius));
                    float& px = img[y * hw + x];
                    px = static_cast<float>(std::clamp(static_cast<double>(px) + v, 0.0, 1.0));
                }
        } else {  // ring
            const double radius = rng.uniform(size / 6.0, size / 4.0);
            const double thickness = rng.uniform(size / 16.0, size / 10.0);
            for (uint32_t y = 0; y < hw; ++y)
                for (uint32_t x = 0; x < hw; ++x) {
                    const double d = std::sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy));
                    const double band = std::fabs(d - radius);
                    if (band >= thickness) continue;
                    const double v = amplitude * (1.0 - band / thickness);
                    float& px = img[y * hw + x];
                    px = static_cast<float>(std::clamp(static_cast<double>(px) + v, 0.0, 1.0));
                }
        }
    }
    return out;
}

namespace {

uint32_t read_u32(std::istream& in, const std::string& path, std::size_t& offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) {
        throw FormatError(path + ": truncated at byte " + std::to_string(offset));
    }
    offset += 4;
    return static_cast<uint32_t>(buf[0]) | (static_cast<uint32_t>(buf[1]) << 8) |
           (static_cast<uint32_t>(buf[2]) << 16) | (static_cast<uint32_t>(buf[3]) << 24);
}

void write_u32(std::ostream& out, uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<char*>(buf), 4);
}

}  // namespace

LabeledImageSet load_idx_like(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FormatError("cannot open " + images_path);
    std::size_t offset = 0;
    const uint32_t magic = read_u32(imgs, images_path, offset);
    if (magic != kImagesMagic) {
        throw FormatError(images_path + ": bad image magic at byte 0");
    }
    const uint32_t n = read_u32(imgs, images_path, offset);
    const uint32_t h = read_u32(imgs, images_path, offset);
    const uint32_t w = read_u32(imgs, images_path, offset);
    if (n == 0 || h == 0 || w == 0) {
        throw FormatError(images_path + ": zero count or dims in header");
    }
    const std::size_t pixels = static_cast<std::size_t>(n) * h * w;
    std::vector<unsigned char> raw(pixels);
    imgs.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(pixels));
    if (static_cast<std::size_t>(imgs.gcount()) != pixels) {
        throw FormatError(images_path + ": truncated pixel data at byte " +
                          std::to_string(offset + static_cast<std::size_t>(imgs.gcount())));
    }

    std::ifstream lbls(labels_path, std::ios::binary);
    if (!lbls) throw FormatError("cannot open " + labels_path);
    std::size_t loffset = 0;
    const uint32_t lmagic = read_u32(lbls, labels_path, loffset);
    if (lmagic != kLabelsMagic) {
        throw FormatError(labels_path + ": bad label magic at byte 0");
    }
    const uint32_t ln = read_u32(lbls, labels_path, loffset);
    if (ln != n) {
        throw FormatError("count mismatch: " + images_path + " has " + std::to_string(n) +
                          " images but " + labels_path + " has " + std::to_string(ln) +
                          " labels");
    }
    std::vector<unsigned char> lraw(n);
    lbls.read(reinterpret_cast<char*>(lraw.data()), n);
    if (static_cast<std::size_t>(lbls.gcount()) != n) {
        throw FormatError(labels_path + ": truncated label data at byte " +
                          std::to_string(loffset + static_cast<std::size_t>(lbls.gcount())));
    }

    LabeledImageSet out;
    out.images = Tensor({n, 1, h, w});
    for (std::size_t i = 0; i < pixels; ++i) {
        out.images[i] = static_cast<float>(raw[i]) / 255.0f;
    }
    out.labels.resize(n);
    for (uint32_t i = 0; i < n; ++i) {
        if (lraw[i] > 1) {
            throw FormatError(labels_path + ": label value " + std::to_string(lraw[i]) +
                              " at index " + std::to_string(i) + " is not binary");
        }
        out.labels[i] = lraw[i];
    }
    return out;
}

void save_idx_like(const LabeledImageSet& set, const std::string& images_path,
                   const std::string& labels_path) {
    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw FormatError("cannot write " + images_path);
    write_u32(imgs, kImagesMagic);
    write_u32(imgs, set.count());
    write_u32(imgs, set.height());
    write_u32(imgs, set.width());
    for (std::size_t i = 0; i < set.images.size(); ++i) {
        const float v = std::clamp(set.images[i], 0.0f, 1.0f);
        const unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0f));
        imgs.write(reinterpret_cast<const char*>(&b), 1);
    }

    std::ofstream lbls(labels_path, std::ios::binary);
    if (!lbls) throw FormatError("cannot write " + labels_path);
    write_u32(lbls, kLabelsMagic);
    write_u32(lbls, set.count());
    for (uint8_t l : set.labels) {
        lbls.write(reinterpret_cast<const char*>(&l), 1);
    }
}

namespace {

LabeledImageSet take(const LabeledImageSet& set, const std::vector<uint32_t>& indices) {
    LabeledImageSet out;
    out.task_name = set.task_name;
    const std::size_t pixels = static_cast<std::size_t>(set.height()) * set.width();
    out.images = Tensor({static_cast<uint32_t>(indices.size()), 1, set.height(), set.width()});
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::memcpy(out.images.data() + i * pixels, set.images.data() + indices[i] * pixels,
                    pixels * sizeof(float));
        out.labels[i] = set.labels[indices[i]];
    }
    return out;
}

}  // namespace

DatasetSplit split_dataset(const LabeledImageSet& set, double fraction, uint64_t seed) {
    const uint32_t n = set.count();
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw DomainError("validation fraction must lie strictly between 0 and 1");
    }
    if (n < 2) throw DomainError("need at least 2 samples to split");

    std::vector<uint32_t> pos, neg;
    for (uint32_t i = 0; i < n; ++i) (set.labels[i] ? pos : neg).push_back(i);

    const uint32_t target = static_cast<uint32_t>(std::lround(fraction * n));
    Rng rng(seed);
    std::vector<uint32_t> val_idx, train_idx;

    if (pos.size() < 2 || neg.size() < 2) {
        // stratification impossible; plain shuffled split
        std::vector<uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        shuffle(all, rng);
        val_idx.assign(all.begin(), all.begin() + target);
        train_idx.assign(all.begin() + target, all.end());
    } else {
        shuffle(pos, rng);
        shuffle(neg, rng);
        // proportional floor allocation, remainder to the larger fractional part
        const double fp = fraction * pos.size();
        const double fn = fraction * neg.size();
        uint32_t vp = static_cast<uint32_t>(std::floor(fp));
        uint32_t vn = static_cast<uint32_t>(std::floor(fn));
        while (vp + vn < target) {
            if (fp - vp >= fn - vn && vp < pos.size()) ++vp;
            else ++vn;
        }
        while (vp + vn > target) {
            if (fp - vp <= fn - vn && vp > 0) --vp;
            else --vn;
        }
        val_idx.assign(pos.begin(), pos.begin() + vp);
        val_idx.insert(val_idx.end(), neg.begin(), neg.begin() + vn);
        train_idx.assign(pos.begin() + vp, pos.end());
        train_idx.insert(train_idx.end(), neg.begin() + vn, neg.end());
    }
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    DatasetSplit out;
    out.split_seed = seed;
    out.validation_fraction = fraction;
    out.train = take(set, train_idx);
    out.validation = take(set, val_idx);
    return out;
}

}  // namespace fedmt
