#include "ndbench/hash.h"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "ndbench/errors.h"

namespace ndbench {

namespace {

struct EvpCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};
using EvpCtx = std::unique_ptr<EVP_MD_CTX, EvpCtxDeleter>;

Md5Digest finish(EVP_MD_CTX* ctx) {
  Md5Digest out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, out.data(), &len) != 1 || len != out.size())
    throw std::runtime_error("md5 digest finalization failed");
  return out;
}

EvpCtx make_md5_ctx() {
  EvpCtx ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_md5(), nullptr) != 1)
    throw std::runtime_error("md5 context initialization failed");
  return ctx;
}

}  // namespace

Md5Digest md5_bytes(const void* data, std::size_t len) {
  EvpCtx ctx = make_md5_ctx();
  if (len > 0 && EVP_DigestUpdate(ctx.get(), data, len) != 1)
    throw std::runtime_error("md5 update failed");
  return finish(ctx.get());
}

Md5Digest md5_string(std::string_view s) { return md5_bytes(s.data(), s.size()); }

Md5Digest md5_file(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "rb"),
                                                    &std::fclose);
  if (!f) throw input_error("cannot open file for hashing: " + path);
  EvpCtx ctx = make_md5_ctx();
  std::vector<unsigned char> buf(1 << 16);
  for (;;) {
    const std::size_t n = std::fread(buf.data(), 1, buf.size(), f.get());
    if (n > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), n) != 1)
      throw std::runtime_error("md5 update failed");
    if (n < buf.size()) {
      if (std::ferror(f.get())) throw input_error("read error while hashing: " + path);
      break;
    }
  }
  return finish(ctx.get());
}

std::string to_hex(const Md5Digest& d) {
  static const char* kHex = "0123456789abcdef";
  std::string out(32, '0');
  for (std::size_t i = 0; i < d.size(); ++i) {
    out[2 * i] = kHex[d[i] >> 4];
    out[2 * i + 1] = kHex[d[i] & 0xf];
  }
  return out;
}

Md5Digest md5_from_hex(std::string_view hex) {
  if (hex.size() != 32) throw input_error("md5 hex string must have 32 characters");
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw input_error("invalid md5 hex character");
  };
  Md5Digest out{};
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  return out;
}

}  // namespace ndbench
