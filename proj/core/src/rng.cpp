#include "modeclust/rng.hpp"

namespace modeclust {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RngStream RngStream::derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return RngStream(h);
}

RngStream RngStream::derive(std::uint64_t master, Stage stage,
                            std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(master ^ mix64(static_cast<std::uint64_t>(stage) * 0xd1b54a32d192ed03ULL));
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return RngStream(h);
}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::normal() { return normal_(engine_); }

Vector RngStream::normal_vector(int d) {
  Vector z(d);
  for (int i = 0; i < d; ++i) z[i] = normal_(engine_);
  return z;
}

}  // namespace modeclust
