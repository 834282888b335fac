#include "echochan/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "echochan/error.hpp"
#include "echochan/rng.hpp"

namespace echochan {

void SequenceDataset::validate() const {
  if (inputs.size() != targets.size()) {
    throw ShapeError("dataset: " + std::to_string(inputs.size()) + " input sequences but " +
                     std::to_string(targets.size()) + " target sequences");
  }
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    if (inputs[s].rows() != input_dim || inputs[s].cols() != seq_len ||
        targets[s].rows() != output_dim || targets[s].cols() != seq_len) {
      throw ShapeError("dataset: sequence " + std::to_string(s) + " has input " +
                       inputs[s].shape_string() + " and target " + targets[s].shape_string() +
                       ", expected " + std::to_string(input_dim) + "x" + std::to_string(seq_len) +
                       " and " + std::to_string(output_dim) + "x" + std::to_string(seq_len));
    }
  }
}

SequenceDataset SequenceDataset::subset(std::span<const std::size_t> indices) const {
  SequenceDataset out;
  out.seq_len = seq_len;
  out.input_dim = input_dim;
  out.output_dim = output_dim;
  out.meta = meta;
  out.inputs.reserve(indices.size());
  out.targets.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= num_sequences()) {
      throw ShapeError("dataset: index " + std::to_string(i) + " out of range for " +
                       std::to_string(num_sequences()) + " sequences");
    }
    out.inputs.push_back(inputs[i]);
    out.targets.push_back(targets[i]);
  }
  return out;
}

SequenceDataset SequenceDataset::slice(std::size_t first, std::size_t count) const {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), first);
  return subset(idx);
}

DatasetSplit split_dataset(const SequenceDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split: train fraction must lie in (0, 1)");
  }
  const std::size_t n = ds.num_sequences();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  return DatasetSplit{ds.subset(std::span(order).first(n_train)),
                      ds.subset(std::span(order).subspan(n_train))};
}

namespace {

void hash_u64(std::uint64_t& h, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  h = fnv1a(std::string_view(bytes, 8), h);
}

}  // namespace

std::uint64_t fingerprint(const SequenceDataset& ds) {
  std::uint64_t h = fnv1a({});
  hash_u64(h, ds.num_sequences());
  hash_u64(h, ds.seq_len);
  hash_u64(h, ds.input_dim);
  hash_u64(h, ds.output_dim);
  for (std::size_t s = 0; s < ds.num_sequences(); ++s) {
    for (double v : ds.inputs[s].data()) hash_u64(h, std::bit_cast<std::uint64_t>(v));
    for (double v : ds.targets[s].data()) hash_u64(h, std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

}  // namespace echochan
