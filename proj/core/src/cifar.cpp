#include "epr/cifar.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

namespace epr {
namespace {

constexpr std::size_t kPixels = kCifarWidth * kCifarWidth * kCifarChannels;
constexpr std::size_t kRecord = 2 + kPixels;

void read_split(const std::filesystem::path& file, LabeledSplit& split) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CIFAR-100 file " + file.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (bytes == 0 || bytes % kRecord != 0) {
    throw std::runtime_error(file.string() + " is not a CIFAR-100 binary file (size " + std::to_string(bytes) +
                             " is not a multiple of " + std::to_string(kRecord) + ")");
  }
  const std::size_t n = bytes / kRecord;
  std::array<unsigned char, kRecord> rec{};
  for (std::size_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(rec.data()), kRecord);
    if (!in) throw std::runtime_error("truncated record in " + file.string());
    const int fine = rec[1];
    if (fine >= kCifar100Classes) {
      throw std::runtime_error("fine label " + std::to_string(fine) + " out of range in " + file.string());
    }
    // The file layout is already channel planes of rows, matching (C, H, W).
    Tensor img({kCifarChannels, kCifarWidth, kCifarWidth});
    for (std::size_t p = 0; p < kPixels; ++p) img[p] = static_cast<float>(rec[2 + p]) / 255.0f;
    split.images.push_back(std::make_shared<const Tensor>(std::move(img)));
    split.labels.push_back(fine);
  }
}

}  // namespace

Dataset load_cifar100_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("CIFAR-100 directory not found: " + dir.string());
  }
  Dataset ds;
  ds.name = "cifar100";
  ds.channels = kCifarChannels;
  ds.width = kCifarWidth;
  ds.n_classes = kCifar100Classes;
  read_split(dir / "train.bin", ds.train);
  read_split(dir / "test.bin", ds.test);
  return ds;
}

}  // namespace epr
