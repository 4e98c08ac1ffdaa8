import numpy as np
import pytest

from nldia.formula import parse_formula
from nldia.lexicon import (LexiconError, SplitMix64, UnknownWord, demo_path, load_lexicon,
                           parse_lexicon, resolve)
from nldia.tensor import relpron_tensor

HEADER = """\
space N 4
space S 3
atom np N
atom n  N
atom s  S
"""


def test_splitmix_reference_stream():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
        4593380528125082431, 16408922859458223821]
    assert SplitMix64(0).next_u64() == 0xE220A8397B1DCDAF
    with pytest.raises(ValueError):
        SplitMix64(-1)


def test_uniform_draws():
    u = SplitMix64(7).uniform(1000)
    assert u.min() >= 0 and u.max() < 1
    first = SplitMix64(7).next_u64()
    assert u[0] == (first >> 11) * 2.0**-53


def test_dutch_demo():
    lex = load_lexicon(demo_path("dutch"))
    assert list(lex.entries) == ["mannen", "die", "vrouwen", "haten"]
    types = {w: str(es[0].formula) for w, es in lex.entries.items()}
    assert types == {"mannen": "n", "die": r"(n\n)/(<>[]np\s)", "vrouwen": "np",
                     "haten": r"np\(np\s)"}
    assert lex.entries["die"][0].source.name == "relpron"
    (f, t), = resolve(lex, "die")
    assert f == parse_formula(r"(n\n)/(<>[]np\s)")
    np.testing.assert_array_equal(t, relpron_tensor(4, 3))
    (f, t), = resolve(lex, "haten")
    assert t.shape == (4, 4, 3)


def test_unknown_word():
    lex = load_lexicon(demo_path("dutch"))
    with pytest.raises(UnknownWord, match="xyzzy"):
        resolve(lex, "xyzzy")
    assert "xyzzy" not in lex and "die" in lex


def test_seeded_determinism():
    a = load_lexicon(demo_path("english"))
    b = load_lexicon(demo_path("english"))
    for w in a.entries:
        assert a.entries[w][0].tensor.tobytes() == b.entries[w][0].tensor.tobytes()


def test_seeded_fill_is_row_major():
    lex = parse_lexicon(HEADER + r"word hate : np\(np\s) = seed 13")
    t = lex.entries["hate"][0].tensor
    np.testing.assert_array_equal(t.ravel(), SplitMix64(13).uniform(48))


def test_seed_offset_and_dims_override():
    base = parse_lexicon(HEADER + "word x : np = seed 5")
    shifted = parse_lexicon(HEADER + "word x : np = seed 5", seed_offset=2)
    same = parse_lexicon(HEADER + "word x : np = seed 7")
    np.testing.assert_array_equal(shifted.entries["x"][0].tensor, same.entries["x"][0].tensor)
    assert not np.array_equal(base.entries["x"][0].tensor, shifted.entries["x"][0].tensor)
    small = parse_lexicon(HEADER + "word x : np = seed 5", dims={"N": 2})
    assert small.entries["x"][0].tensor.shape == (2,)
    assert small.atom_map["np"] == ("N", 2)
    with pytest.raises(LexiconError):
        parse_lexicon(HEADER, dims={"Q": 2})


def test_shapes_match_types():
    for name in ("dutch", "english"):
        lex = load_lexicon(demo_path(name))
        for entries in lex.entries.values():
            for e in entries:
                assert e.tensor.shape == lex.signature(e.formula).dims


def test_ones_and_values():
    lex = parse_lexicon(HEADER + "word it : s = ones\nword p : np = values [0.1, 0.2, 0.3, 0.4]")
    np.testing.assert_array_equal(resolve(lex, "it")[0][1], [1, 1, 1])
    np.testing.assert_array_equal(resolve(lex, "p")[0][1], [0.1, 0.2, 0.3, 0.4])


def test_values_row_major():
    lex = parse_lexicon(HEADER.replace("N 4", "N 2").replace("S 3", "S 2")
                        + r"word v : np\s = values [1, 2, 3, 4]")
    np.testing.assert_array_equal(resolve(lex, "v")[0][1], [[1, 2], [3, 4]])


def test_homonyms_in_file_order():
    lex = parse_lexicon(HEADER + "word bank : n = ones\n# comment\nword bank : np\\s = seed 1\n")
    readings = resolve(lex, "bank")
    assert [str(f) for f, _ in readings] == ["n", r"np\s"]


def test_relpron_recipe_positions():
    lex = parse_lexicon(HEADER + "word whom : (n\\n)/(s/<>[]np) = recipe relpron lambda=2")
    t = resolve(lex, "whom")[0][1]
    assert t.shape == (4, 4, 3, 4)
    np.testing.assert_array_equal(t, 2 * np.moveaxis(relpron_tensor(4, 3), 3, 2))


@pytest.mark.parametrize("line,message", [
    ("word p : np = values [1, 2]", "line 6: 2 values given"),
    ("word p : np = recipe magic", "line 6: unknown recipe 'magic'"),
    ("word p : np = recipe relpron", "line 6: relpron needs four factors"),
    ("word p : np = recipe relpron gamma=1", "line 6: unknown relpron parameters"),
    ("word p : vp = ones", "line 6: unknown atom 'vp'"),
    ("word p : np/ = ones", "line 6:"),
    ("word p np = ones", "line 6: expected"),
    ("word p : np = seed x", "line 6: bad seed"),
    ("word p : np = values [1, ", "line 6: bad values"),
    ("word p : np = random", "line 6: unknown tensor source"),
    ("atom vp Q", "line 6: undeclared space"),
    ("space Q 0", "line 6: dimension must be positive"),
    ("frobnicate", "line 6: unknown directive"),
])
def test_errors_carry_line_numbers(line, message):
    with pytest.raises(LexiconError, match=message.replace("[", r"\[")) as err:
        parse_lexicon(HEADER + line + "\n")
    assert err.value.line == 6


def test_tensors_read_only():
    lex = load_lexicon(demo_path("dutch"))
    with pytest.raises(ValueError):
        lex.entries["mannen"][0].tensor[0] = 1.0


def test_unknown_demo():
    with pytest.raises(FileNotFoundError):
        demo_path("klingon")
