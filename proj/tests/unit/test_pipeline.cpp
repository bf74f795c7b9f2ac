#include <openssl/evp.h>

#include <random>

#include "common/error.hpp"
#include "doctest.h"
#include "pipeline/base64.hpp"
#include "pipeline/pipeline.hpp"

using namespace fieldcam;
using namespace fieldcam::pipeline;

namespace {

// Independent implementations used only as oracles.
Bytes openssl_aes_ecb(ByteView in, const AesKey& key, bool encrypt) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  EVP_CipherInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr, encrypt ? 1 : 0);
  EVP_CIPHER_CTX_set_padding(ctx, 0);
  Bytes out(in.size() + 16);
  int n = 0, m = 0;
  EVP_CipherUpdate(ctx, out.data(), &n, in.data(), static_cast<int>(in.size()));
  EVP_CipherFinal_ex(ctx, out.data() + n, &m);
  EVP_CIPHER_CTX_free(ctx);
  out.resize(static_cast<std::size_t>(n + m));
  return out;
}

std::string openssl_b64(ByteView in) {
  std::string out(4 * ((in.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), in.data(),
                                static_cast<int>(in.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

const CipherConfig kCfg = CipherConfig::from_hex("2b7e151628aed2a6abf7158809cf4f3c");

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("pad16 rounds up with zero bytes") {
  Bytes hundred(100, 0xAB);
  const Bytes p = pad16(hundred);
  CHECK(p.size() == 112);
  CHECK(std::equal(hundred.begin(), hundred.end(), p.begin()));
  CHECK(std::all_of(p.begin() + 100, p.end(), [](auto b) { return b == 0; }));

  Bytes sixteen(16, 7);
  CHECK(pad16(sixteen) == sixteen);
  CHECK(pad16(Bytes(17, 1)).size() == 32);
  CHECK(code_of([] { pad16(Bytes{}); }) == ErrorCode::EmptyFile);
}

TEST_CASE("AES-128 matches the FIPS-197 appendix C.1 vector and OpenSSL") {
  const auto key = CipherConfig::from_hex("000102030405060708090a0b0c0d0e0f");
  const Bytes plain = parse_hex("00112233445566778899aabbccddeeff");
  const Bytes expected = parse_hex("69c4e0d86a7b0430d8cdb78070b4c55a");

  // The frozen vector must agree with the oracle before we trust it.
  REQUIRE(openssl_aes_ecb(plain, key.key, true) == expected);
  CHECK(aes128_encrypt(plain, key) == expected);
  CHECK(aes128_decrypt(expected, key) == plain);
}

TEST_CASE("AES-128 ECB agrees with OpenSSL on random data") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 50; ++i) {
    AesKey key;
    for (auto& k : key) k = static_cast<std::uint8_t>(rng());
    const Bytes data = random_bytes(rng, 16 * (1 + rng() % 64));
    const Bytes ours = ecb_encrypt(data, key);
    CHECK(ours == openssl_aes_ecb(data, key, true));
    CHECK(ecb_decrypt(ours, key) == data);
  }
}

TEST_CASE("AES round trip, ECB determinism, wrong key, unpadded input") {
  std::mt19937_64 rng(7);
  const Bytes block = random_bytes(rng, 4096);
  CHECK(aes128_decrypt(aes128_encrypt(block, kCfg), kCfg) == block);

  Bytes twin(32, 0);
  for (int i = 0; i < 16; ++i) twin[i] = twin[16 + i] = static_cast<std::uint8_t>(i * 13);
  const Bytes c = aes128_encrypt(twin, kCfg);
  CHECK(std::equal(c.begin(), c.begin() + 16, c.begin() + 16));

  auto other = kCfg;
  other.key[0] ^= 1;
  CHECK(aes128_decrypt(aes128_encrypt(block, kCfg), other) != block);

  CHECK(code_of([] { aes128_encrypt(Bytes(15), kCfg); }) == ErrorCode::UnpaddedInput);
  CHECK(code_of([] { aes128_decrypt(Bytes(33), kCfg); }) == ErrorCode::UnpaddedInput);
}

TEST_CASE("base64 matches RFC 4648 vectors and OpenSSL") {
  const std::pair<const char*, const char*> vectors[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},       {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}, {"Man", "TWFu"},
  };
  for (auto [plain, enc] : vectors) {
    REQUIRE(openssl_b64(as_bytes(plain)) == enc);
    CHECK(b64_encode(as_bytes(plain)) == enc);
    CHECK(b64_decode(enc) == to_bytes(plain));
  }
  CHECK(b64_encode(Bytes{0x00}) == "AA==");
  CHECK(b64_decode("AA==\n") == Bytes{0x00});
  CHECK(b64_decode("TWFu \r\n\t") == to_bytes("Man"));
}

TEST_CASE("base64 rejects illegal input") {
  CHECK(code_of([] { b64_decode("TW@u"); }) == ErrorCode::InvalidEncoding);
  CHECK(code_of([] { b64_decode("TWF"); }) == ErrorCode::InvalidEncoding);
  CHECK(code_of([] { b64_decode("T=Fu"); }) == ErrorCode::InvalidEncoding);
  CHECK(code_of([] { b64_decode(" TWFu"); }) == ErrorCode::InvalidEncoding);
  CHECK(code_of([] { b64_decode("AA==AA=="); }) == ErrorCode::InvalidEncoding);
}

TEST_CASE("base64 random agreement and length law") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    const Bytes data = random_bytes(rng, rng() % 700);
    const std::string enc = b64_encode(data);
    CHECK(enc == openssl_b64(data));
    CHECK(enc.size() == 4 * ((data.size() + 2) / 3));
    CHECK(b64_decode(enc) == data);
  }
}

TEST_CASE("truncate16") {
  const Bytes big(18093, 1);
  CHECK(truncate16(big).size() == 18080);
  const Bytes exact(32, 2);
  CHECK(truncate16(exact) == exact);
  CHECK(code_of([] { truncate16(Bytes(15)); }) == ErrorCode::TooShort);
}

TEST_CASE("plan_segments") {
  // Oracle: slice the stream literally and count.
  auto brute = [](std::size_t size, std::size_t seg) {
    SegmentPlan p{0, seg, 0};
    for (std::size_t off = 0; off < size; off += seg) {
      ++p.segment_count;
      p.last_segment_size = std::min(seg, size - off);
    }
    return p;
  };
  CHECK(plan_segments(18093, 1500) == SegmentPlan{13, 1500, 93});
  CHECK(plan_segments(18093, 1500).segment_count + 1 == 14);
  CHECK(plan_segments(1500, 1500) == SegmentPlan{1, 1500, 1500});
  CHECK(plan_segments(1501, 1500) == SegmentPlan{2, 1500, 1});
  for (std::size_t s = 1; s < 20000; s += 37) {
    CHECK(plan_segments(s) == brute(s, 1500));
    CHECK(plan_segments(s).total_size() == s);
  }
  CHECK(plan_segments(5000, 1548).segment_size == 1548);
  CHECK(code_of([] { plan_segments(0); }) == ErrorCode::EmptyFile);
  CHECK(code_of([] { plan_segments(100, 1549); }) == ErrorCode::ExceedsModemLimit);
}

TEST_CASE("transfer header render/parse") {
  const std::string h = render_header({13, 1500, 93});
  CHECK(h == "13,1500,93");
  CHECK(h.size() == 10);
  CHECK(parse_header("1,1500,1500") == SegmentPlan{1, 1500, 1500});
  for (const char* bad : {"13,1500", "13,1500,93,1", "13, 1500,93", "a,1500,93", "0,1500,1",
                          "2,1500,0", "2,1500,1501", "2,1600,10", "", ",,", "13,1500,93\n"}) {
    CAPTURE(bad);
    CHECK(code_of([&] { parse_header(bad); }) == ErrorCode::MalformedHeader);
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto p = plan_segments(1 + rng() % 1'000'000, 1 + rng() % 1548);
    CHECK(parse_header(render_header(p)) == p);
  }
}

TEST_CASE("encode/decode pipeline") {
  std::mt19937_64 rng(1234);

  // 13,568 bytes pads to itself; 4 * ceil(13568 / 3) = 18092.
  CHECK(encoded_length(13568) == 18092);
  const auto raw13k = RawFile::from(random_bytes(rng, 13568));
  CHECK(encode_pipeline(raw13k, kCfg).size() == 18092);

  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + rng() % 3000;
    const auto raw = RawFile::from(random_bytes(rng, n));
    const std::string enc = encode_pipeline(raw, kCfg);
    CHECK(enc.size() == 4 * (((n + 15) / 16 * 16 + 2) / 3));
    CHECK(enc == b64_encode(aes128_encrypt(pad16(raw.bytes), kCfg)));
    const Bytes dec = decode_pipeline(enc, kCfg);
    REQUIRE(dec.size() >= n);
    CHECK(std::equal(raw.bytes.begin(), raw.bytes.end(), dec.begin()));
    CHECK(std::all_of(dec.begin() + static_cast<long>(n), dec.end(), [](auto b) { return b == 0; }));
  }
  CHECK(code_of([] { RawFile::from({}); }) == ErrorCode::EmptyFile);
  CHECK(code_of([] { CipherConfig::from_hex("00"); }) == ErrorCode::InvalidArgument);
}
