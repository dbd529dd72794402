#include <gtest/gtest.h>

#include "nwulab/keys/dh.hpp"
#include "nwulab/keys/prf.hpp"
#include "nwulab/rng.hpp"

using namespace nwulab;
using namespace nwulab::keys;

namespace {

// --- Exponentiation checked by hand on a 5-bit group ------------------------

TEST(Dh, TinyGroupMatchesHandComputation) {
  // p = 23, g = 5: 5^6 mod 23 = 15625 mod 23 = 8.
  DhGroupPtr g = make_group("17", 5);
  EXPECT_EQ(group_prime_bytes(*g), 1u);
  EXPECT_EQ(group_prime_bits(*g), 5u);
  Bytes shared = dh_shared_secret(*g, Bytes{6}, Bytes{5});
  EXPECT_EQ(shared, Bytes{8});
  // And 5^2 mod 23 = 2.
  EXPECT_EQ(dh_shared_secret(*g, Bytes{2}, Bytes{5}), Bytes{2});
}

TEST(Dh, TinyGroupAgreementIsSymmetric) {
  DhGroupPtr g = make_group("17", 5);
  SeededRng rng(11);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    DhKeyPair a = dh_keypair(*g, rng);
    DhKeyPair b = dh_keypair(*g, rng);
    // A tiny group can produce p-1 as a public value, which the other
    // end rightly refuses; skip those rare draws.
    if (a.public_key == Bytes{22} || b.public_key == Bytes{22}) continue;
    Bytes ab = dh_shared_secret(*g, a.private_key, b.public_key);
    Bytes ba = dh_shared_secret(*g, b.private_key, a.public_key);
    EXPECT_EQ(ab, ba) << "iteration " << i;
    ++checked;
  }
  EXPECT_GT(checked, 50);
}

TEST(Dh, DegeneratePeerValuesAreRejected) {
  DhGroupPtr g = make_group("17", 5);
  for (uint8_t bad : {uint8_t{0}, uint8_t{1}, uint8_t{22}, uint8_t{23}, uint8_t{255}}) {
    EXPECT_THROW(dh_shared_secret(*g, Bytes{6}, Bytes{bad}), DhError)
        << "peer value " << int(bad);
  }
}

TEST(Dh, FullGroupAgreementAndShape) {
  DhGroupPtr g = modp2048();
  EXPECT_EQ(group_prime_bytes(*g), 256u);
  EXPECT_EQ(group_prime_bits(*g), 2048u);
  SeededRng rng(12);
  DhKeyPair a = dh_keypair(*g, rng);
  DhKeyPair b = dh_keypair(*g, rng);
  EXPECT_EQ(a.public_key.size(), 256u);
  EXPECT_EQ(b.public_key.size(), 256u);
  Bytes ab = dh_shared_secret(*g, a.private_key, b.public_key);
  Bytes ba = dh_shared_secret(*g, b.private_key, a.public_key);
  EXPECT_EQ(ab, ba);
  EXPECT_EQ(ab.size(), 256u);
}

TEST(Dh, ShortExponentsStillAgree) {
  DhGroupPtr g = modp2048();
  SeededRng rng(13);
  DhKeyPair a = dh_keypair(*g, rng, 256);
  DhKeyPair b = dh_keypair(*g, rng, 256);
  EXPECT_LE(a.private_key.size(), 32u);
  EXPECT_EQ(dh_shared_secret(*g, a.private_key, b.public_key),
            dh_shared_secret(*g, b.private_key, a.public_key));
}

TEST(Dh, GroupConstructionValidation) {
  EXPECT_THROW(make_group("xyz", 5), DhError);
  EXPECT_THROW(make_group("17", 0), DhError);
  EXPECT_THROW(make_group("17", 1), DhError);
  EXPECT_THROW(make_group("2", 2), DhError);  // modulus too small to be useful
}

TEST(Dh, ExponentiationCounterTracksWork) {
  DhGroupPtr g = make_group("17", 5);
  SeededRng rng(14);
  reset_modexp_count();
  EXPECT_EQ(modexp_count(), 0u);
  DhKeyPair a = dh_keypair(*g, rng);
  EXPECT_EQ(modexp_count(), 1u);
  DhKeyPair b = dh_keypair(*g, rng);
  if (b.public_key != Bytes{22}) {
    (void)dh_shared_secret(*g, a.private_key, b.public_key);
    EXPECT_EQ(modexp_count(), 3u);
  }
  reset_modexp_count();
  EXPECT_EQ(modexp_count(), 0u);
}

// --- Keyed-hash known answers (published HMAC-SHA-256 vectors) --------------

struct HmacVector {
  Bytes key;
  Bytes data;
  const char* expected_hex;
};

TEST(Prf, KeyedHashKnownAnswers) {
  std::vector<HmacVector> cases = {
      {Bytes(20, 0x0b), to_bytes("Hi There"),
       "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"},
      {to_bytes("Jefe"), to_bytes("what do ya want for nothing?"),
       "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"},
      {Bytes(20, 0xaa), Bytes(50, 0xdd),
       "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"},
      {from_hex("0102030405060708090a0b0c0d0e0f10111213141516171819"), Bytes(50, 0xcd),
       "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b"},
      {Bytes(131, 0xaa), to_bytes("Test Using Larger Than Block-Size Key - Hash Key First"),
       "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"},
      {Bytes(131, 0xaa),
       to_bytes("This is a test using a larger than block-size key and a larger than "
                "block-size data. The key needs to be hashed before being used by the HMAC "
                "algorithm."),
       "9b09ffa71b942fcb27635fbcd5b0e944bfdc63644f0713938a7f51535c3a35e2"},
  };
  for (size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(to_hex(hmac_sha256(cases[i].key, cases[i].data)), cases[i].expected_hex)
        << "vector " << i;
  }
}

TEST(Prf, TruncatedTagKnownAnswer) {
  // The 128-bit-truncation vector: integrity tags on the wire use
  // exactly this cut.
  Bytes mac = hmac_sha256(Bytes(20, 0x0c), to_bytes("Test With Truncation"));
  mac.resize(16);
  EXPECT_EQ(to_hex(mac), "a3b6167473100ee06e0c796c2955552b");
}

TEST(Prf, DigestKnownAnswers) {
  EXPECT_EQ(to_hex(sha256(to_bytes("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(to_hex(sha256({})),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(sha1(to_bytes("abc"))), "a9993e364706816aba3e25717850c26c9cd0d89d");
}

// --- Keyed expansion ---------------------------------------------------------

TEST(Prf, ExpansionMatchesManualChaining) {
  Bytes key = to_bytes("expansion key");
  Bytes seed = to_bytes("expansion seed");

  Bytes t1_input = seed;
  t1_input.push_back(0x01);
  Bytes t1 = hmac_sha256(key, t1_input);

  Bytes t2_input = t1;
  t2_input.insert(t2_input.end(), seed.begin(), seed.end());
  t2_input.push_back(0x02);
  Bytes t2 = hmac_sha256(key, t2_input);

  Bytes expected = t1;
  expected.insert(expected.end(), t2.begin(), t2.end());

  EXPECT_EQ(prf_plus(key, seed, 32), t1);
  EXPECT_EQ(prf_plus(key, seed, 64), expected);
  Bytes first40 = expected;
  first40.resize(40);
  EXPECT_EQ(prf_plus(key, seed, 40), first40);
}

TEST(Prf, ExpansionPrefixProperty) {
  Bytes key = to_bytes("prefix key");
  Bytes seed = to_bytes("prefix seed");
  Bytes longest = prf_plus(key, seed, 224);
  for (size_t len : {size_t(1), size_t(17), size_t(32), size_t(64), size_t(96),
                     size_t(100), size_t(128), size_t(160), size_t(192), size_t(224)}) {
    Bytes out = prf_plus(key, seed, len);
    ASSERT_EQ(out.size(), len);
    EXPECT_TRUE(std::equal(out.begin(), out.end(), longest.begin()))
        << "length " << len << " is not a prefix";
  }
}

TEST(Prf, ExpansionBounds) {
  Bytes key = to_bytes("k");
  Bytes seed = to_bytes("s");
  EXPECT_EQ(prf_plus(key, seed, 0).size(), 0u);
  EXPECT_EQ(prf_plus(key, seed, 255 * 32).size(), size_t(255 * 32));
  EXPECT_THROW(prf_plus(key, seed, 255 * 32 + 1), PrfError);
}

TEST(Prf, ExpansionCounterTracksWork) {
  reset_prf_plus_count();
  (void)prf_plus(to_bytes("k"), to_bytes("s"), 96);
  EXPECT_EQ(prf_plus_count(), 1u);  // one expansion, regardless of blocks
  (void)prf_plus(to_bytes("k"), to_bytes("s"), 32);
  EXPECT_EQ(prf_plus_count(), 2u);
  (void)hmac_sha256(to_bytes("k"), to_bytes("s"));  // plain prf is not an expansion
  EXPECT_EQ(prf_plus_count(), 2u);
  reset_prf_plus_count();
}

}  // namespace
