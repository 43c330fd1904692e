"""Long-range deduplicating compressor: oracles, properties, fuzzing."""

import numpy as np
import pytest

from simpack.backends import BackendSpec
from simpack.errors import (
    BadDistance,
    BadLength,
    BadMagic,
    CorruptPayload,
    ExternalBackendFailed,
    UnsupportedVersion,
)
from simpack.longrange import (
    MAGIC,
    MULTIPLIER,
    Literal,
    LrParams,
    Match,
    TokenStream,
    _effective_hash_bits,
    _roll_hash,
    _window_hash,
    compress,
    decompress,
    lr_decode,
    lr_encode,
    parse_tokens,
    serialize_tokens,
)

IDENTITY = BackendSpec.identity()
LZSS = BackendSpec.lzss()


def check_stream_invariants(data: bytes, stream: TokenStream,
                            params: LrParams) -> None:
    """Walk the tokens verifying structural rules and match contents."""
    pos = 0
    for i, token in enumerate(stream.tokens):
        if isinstance(token, Literal):
            if len(stream.tokens) > 1:
                assert token.data, "empty literal in a multi-token stream"
            assert data[pos:pos + len(token.data)] == token.data
            pos += len(token.data)
        else:
            assert token.length >= params.min_match
            assert 1 <= token.distance <= pos
            src = pos - token.distance
            for k in range(token.length):
                assert data[src + k] == data[pos + k]
            pos += token.length
    assert pos == len(data)


def fuzz_blob(rng: np.random.Generator) -> bytes:
    """Small-skewed sizes over a mix of content shapes."""
    size = int(np.exp(rng.uniform(0, np.log(200_000))))
    kind = rng.integers(0, 5)
    if kind == 0:
        return rng.integers(0, 256, size, dtype=np.uint8).tobytes()
    if kind == 1:
        unit = rng.integers(0, 256, max(1, size // 50), dtype=np.uint8).tobytes()
        return (unit * (size // max(1, len(unit)) + 1))[:size]
    if kind == 2:
        half = rng.integers(0, 256, size // 2, dtype=np.uint8).tobytes()
        return half + half
    if kind == 3:
        return bytes(size)
    a = rng.integers(0, 256, size // 3 + 1, dtype=np.uint8).tobytes()
    b = rng.integers(0, 4, size // 3 + 1, dtype=np.uint8).tobytes()
    return a + b + a


class TestEncodeDecode:
    def test_empty(self):
        stream = lr_encode(b"")
        assert stream.tokens == [Literal(b"")]
        assert lr_decode(stream) == b""

    def test_short_input_is_single_literal(self):
        data = b"short"
        stream = lr_encode(data)
        assert stream.tokens == [Literal(data)]

    def test_duplicate_halves(self, rng):
        half = rng.integers(0, 256, 100_000, dtype=np.uint8).tobytes()
        data = half + half
        params = LrParams()
        stream = lr_encode(data, params)
        check_stream_invariants(data, stream, params)
        assert lr_decode(stream) == data
        matched = sum(t.length for t in stream.tokens if isinstance(t, Match))
        assert matched >= len(half) - 2 * params.min_match

    def test_zeros_collapse_to_few_tokens(self):
        stream = lr_encode(bytes(100_000))
        assert len(stream.tokens) <= 3
        assert lr_decode(stream) == bytes(100_000)

    def test_overlapping_match_decodes(self):
        # a long run: matches overlap their own output
        data = b"ab" * 40_000
        stream = lr_encode(data)
        assert lr_decode(stream) == data

    def test_invariants_on_fuzz(self, rng):
        params = LrParams()
        for _ in range(60):
            data = fuzz_blob(rng)
            stream = lr_encode(data, params)
            check_stream_invariants(data, stream, params)
            assert lr_decode(stream) == data

    def test_smaller_min_match_params(self, rng):
        params = LrParams(min_match=16, hash_bits=16, max_chain=2)
        for _ in range(20):
            data = fuzz_blob(rng)
            stream = lr_encode(data, params)
            check_stream_invariants(data, stream, params)
            assert lr_decode(stream) == data

    def test_determinism(self, rng):
        data = fuzz_blob(rng)
        assert serialize_tokens(lr_encode(data)) == \
            serialize_tokens(lr_encode(data))


class TestDecodeErrors:
    def test_distance_before_start(self):
        with pytest.raises(BadDistance):
            lr_decode(TokenStream([Literal(b"ab"), Match(3, 5)]))

    def test_zero_distance(self):
        with pytest.raises(BadDistance):
            lr_decode(TokenStream([Literal(b"ab"), Match(0, 5)]))

    def test_non_positive_length(self):
        with pytest.raises(BadLength):
            lr_decode(TokenStream([Literal(b"ab"), Match(1, 0)]))


class TestRollingHash:
    def test_roll_equals_recompute(self, rng):
        # the kernels agree as 64-bit patterns; signedness of the boxed
        # scalar is lane-dependent, so compare modulo 2**64
        mask = (1 << 64) - 1
        data = rng.integers(0, 256, 4000, dtype=np.uint8)
        width = 64
        pow_w = np.uint64(pow(MULTIPLIER, width - 1, 1 << 64))
        mult = np.uint64(MULTIPLIER)
        with np.errstate(over="ignore"):
            h = _window_hash(data, 0, width, mult)
            for pos in range(data.shape[0] - width):
                rolled = _roll_hash(
                    np.uint64(int(h) & mask), data[pos], data[pos + width],
                    mult, pow_w,
                )
                direct = _window_hash(data, pos + 1, width, mult)
                assert int(rolled) & mask == int(direct) & mask
                h = rolled

    def test_window_hash_depends_on_all_bytes(self, rng):
        data = rng.integers(0, 256, 80, dtype=np.uint8)
        with np.errstate(over="ignore"):
            base = _window_hash(data, 0, 64, np.uint64(MULTIPLIER))
            for k in (0, 1, 31, 63):
                tweaked = data.copy()
                tweaked[k] ^= 1
                assert _window_hash(tweaked, 0, 64, np.uint64(MULTIPLIER)) != base


class TestEffectiveHashBits:
    def test_bounds_and_monotonicity(self):
        params = LrParams()
        previous = 0
        for n in (0, 1, 10**3, 10**5, 10**6, 10**8, 10**12):
            bits = _effective_hash_bits(n, params)
            assert 12 <= bits <= params.hash_bits
            assert bits >= previous
            previous = bits
        assert _effective_hash_bits(10**12, params) == params.hash_bits

    def test_small_inputs_get_small_tables(self):
        assert _effective_hash_bits(1000, LrParams()) == 12


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            LrParams(min_match=8)
        with pytest.raises(ValueError):
            LrParams(hash_bits=31)
        with pytest.raises(ValueError):
            LrParams(max_chain=0)


class TestSerialization:
    def test_round_trip_via_encoder(self, rng):
        for _ in range(30):
            data = fuzz_blob(rng)
            stream = lr_encode(data)
            again = parse_tokens(serialize_tokens(stream))
            assert lr_decode(again) == data

    def test_empty_stream(self):
        blob = serialize_tokens(TokenStream([Literal(b"")]))
        assert parse_tokens(blob).tokens == [Literal(b"")]

    def test_rejects_trailing_bytes(self):
        blob = serialize_tokens(lr_encode(b"payload data here"))
        with pytest.raises(CorruptPayload, match="trailing"):
            parse_tokens(blob + b"\x00")

    def test_rejects_zero_length_match(self):
        # total 4, literal "ab", match distance 1 with length 0
        bad = b"\x04\x02ab\x01\x00"
        with pytest.raises(CorruptPayload, match="zero-length"):
            parse_tokens(bad)

    def test_rejects_total_mismatch(self):
        blob = bytearray(serialize_tokens(lr_encode(b"some literal text")))
        blob[0] += 1  # total raw length varint (small => single byte)
        with pytest.raises(CorruptPayload, match="promises"):
            parse_tokens(bytes(blob))

    def test_rejects_literal_overrun(self):
        blob = b"\x05\x05abc"  # total 5, literal claims 5 bytes, only 3 left
        with pytest.raises(CorruptPayload):
            parse_tokens(blob)

    def test_rejects_truncated_varint(self):
        with pytest.raises(CorruptPayload):
            parse_tokens(b"\xff")

    def test_rejects_empty_blob(self):
        with pytest.raises(CorruptPayload):
            parse_tokens(b"")


class TestContainer:
    @pytest.mark.parametrize("backend", [IDENTITY, LZSS])
    def test_round_trip(self, backend, rng):
        for _ in range(15):
            data = fuzz_blob(rng)
            assert decompress(compress(data, backend=backend)) == data

    def test_compressed_is_smaller_on_duplicates(self, rng):
        half = rng.integers(0, 256, 1 << 18, dtype=np.uint8).tobytes()
        data = half + half
        packed = compress(data, backend=IDENTITY)
        assert len(packed) <= len(half) + int(0.02 * len(half)) + 1024

    def test_sandwich_costs_little(self, rng):
        x = rng.integers(0, 256, 1 << 18, dtype=np.uint8).tobytes()
        y = rng.integers(0, 256, 1 << 18, dtype=np.uint8).tobytes()
        xy = compress(x + y, backend=IDENTITY)
        xyx = compress(x + y + x, backend=IDENTITY)
        assert len(xyx) <= len(xy) + int(0.02 * len(x)) + 1024

    def test_bad_magic(self):
        with pytest.raises(BadMagic):
            decompress(b"NOPE" + bytes(20))
        with pytest.raises(BadMagic):
            decompress(b"\x00")

    def test_unsupported_version(self):
        packed = bytearray(compress(b"data"))
        packed[4:6] = (99).to_bytes(2, "little")
        with pytest.raises(UnsupportedVersion):
            decompress(bytes(packed))

    def test_unknown_backend_id(self):
        packed = bytearray(compress(b"data"))
        packed[6] = 200
        with pytest.raises(CorruptPayload):
            decompress(bytes(packed))

    def test_magic_constant(self):
        assert compress(b"x")[:4] == MAGIC

    def test_corrupt_payload_rejected(self, rng):
        data = rng.integers(0, 256, 5000, dtype=np.uint8).tobytes()
        packed = bytearray(compress(data, backend=IDENTITY))
        packed[12] ^= 0xFF  # first payload byte: the raw-length varint
        with pytest.raises(CorruptPayload):
            decompress(bytes(packed))


class TestExternalBackend:
    def test_filter_round_trip(self, rng):
        spec = BackendSpec.parse("ext:cat")
        data = fuzz_blob(rng)
        packed = compress(data, backend=spec)
        assert decompress(packed, external=spec) == data

    def test_file_template_round_trip(self, rng):
        spec = BackendSpec.parse("ext:cp {in} {out}")
        data = fuzz_blob(rng)
        packed = compress(data, backend=spec)
        assert decompress(packed, external=spec) == data

    def test_external_archive_needs_spec(self):
        spec = BackendSpec.parse("ext:cat")
        packed = compress(b"payload", backend=spec)
        with pytest.raises(ExternalBackendFailed):
            decompress(packed)

    def test_missing_tool(self):
        spec = BackendSpec.parse("ext:definitely-not-a-tool-زz")
        with pytest.raises(ExternalBackendFailed):
            compress(b"data", backend=spec)

    def test_failing_tool(self):
        spec = BackendSpec.parse("ext:false")
        with pytest.raises(ExternalBackendFailed):
            compress(b"data", backend=spec)
