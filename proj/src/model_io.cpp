#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "facebench/error.hpp"
#include "facebench/features.hpp"

namespace facebench {

namespace {

constexpr char kMagic[8] = {'F', 'B', 'F', 'E', 'A', 'T', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t u(int width) {
        require(pos_ + static_cast<std::size_t>(width) <= bytes_.size(), ErrorKind::Io, "truncated model file");
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u(8)); }
    [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_model(const FeatureModel& model) {
    const auto dim = static_cast<std::uint64_t>(model.input_dim());
    const auto k = static_cast<std::uint64_t>(model.n_components());
    require(static_cast<std::uint64_t>(model.basis.rows()) == dim &&
                static_cast<std::uint64_t>(model.eigenvalues.size()) == k,
            ErrorKind::Data, "inconsistent feature model shapes");
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(32 + 8 * (dim + dim * k + k));
    put_u32(out, kVersion);
    put_u32(out, model.kind == FeatureKind::PCA ? 0u : 1u);
    put_u64(out, dim);
    put_u64(out, k);
    for (Eigen::Index i = 0; i < model.mean.size(); ++i) put_f64(out, model.mean[i]);
    for (Eigen::Index j = 0; j < model.basis.cols(); ++j) {
        for (Eigen::Index i = 0; i < model.basis.rows(); ++i) put_f64(out, model.basis(i, j));
    }
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) put_f64(out, model.eigenvalues[i]);
    return out;
}

FeatureModel decode_model(std::span<const std::uint8_t> bytes) {
    require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic, 8) == 0, ErrorKind::Io,
            "not a feature model file (bad magic)");
    Reader in(bytes.subspan(8));
    const auto version = static_cast<std::uint32_t>(in.u(4));
    require(version == kVersion, ErrorKind::Io, "unsupported model version " + std::to_string(version));
    const auto kind = static_cast<std::uint32_t>(in.u(4));
    require(kind <= 1, ErrorKind::Io, "unknown model kind " + std::to_string(kind));
    const std::uint64_t dim = in.u(8);
    const std::uint64_t k = in.u(8);
    require(dim > 0 && k > 0 && k <= dim && dim < (1ULL << 28), ErrorKind::Io, "implausible model shape");
    require(in.remaining() == 8 * (dim + dim * k + k), ErrorKind::Io, "model payload size mismatch");

    FeatureModel m;
    m.kind = kind == 0 ? FeatureKind::PCA : FeatureKind::LDA;
    const auto d = static_cast<Eigen::Index>(dim);
    const auto kk = static_cast<Eigen::Index>(k);
    m.mean.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) m.mean[i] = in.f64();
    m.basis.resize(d, kk);
    for (Eigen::Index j = 0; j < kk; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) m.basis(i, j) = in.f64();
    }
    m.eigenvalues.resize(kk);
    for (Eigen::Index i = 0; i < kk; ++i) m.eigenvalues[i] = in.f64();
    return m;
}

void save_model(const FeatureModel& model, const std::filesystem::path& path) {
    const auto bytes = encode_model(model);
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write model " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

FeatureModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open model " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_model(bytes);
}

}  // namespace facebench
