from pathlib import Path

import numpy as np
import pytest

from cocyclelab import SystemFileError, load_system, parse_system
from cocyclelab.sysfile import format_system
from cocyclelab.systems import BUILTIN, builtin

GOOD = """\
# golden-mean example
name = golden-mixed
alphabet_size = 2
adjacency = 1 1; 1 0
split = 1,2
generator.0 = 0.5 0 0; 0 2 0; 0 0 4
generator.1 = 0.5 0 0  0 3 0  0 0 5
roof.0 = 1
roof.1 = 2
markov_transition = 0.5 0.5; 1 0
"""

REPO_SYSTEMS = Path(__file__).resolve().parents[1] / "systems"


def test_parse_good():
    sd = parse_system(GOOD)
    assert sd.name == "golden-mixed"
    assert sd.cocycle.split == (1, 2)
    assert np.allclose(sd.cocycle.generators[1], np.diag([0.5, 3, 5]))
    assert np.allclose(sd.roof.values, [1, 2])
    assert np.allclose(sd.measure().stationary, [2 / 3, 1 / 3])


def test_default_measure_is_parry():
    sd = parse_system(GOOD.replace("markov_transition = 0.5 0.5; 1 0\n", ""))
    phi = (1 + 5 ** 0.5) / 2
    assert sd.markov is None
    assert sd.measure().stationary[0] == pytest.approx(phi ** 2 / (1 + phi ** 2))


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_roundtrip(name, tmp_path):
    sd = builtin(name)
    p = tmp_path / f"{name}.sys"
    p.write_text(format_system(sd))
    back = load_system(p)
    assert back.name == sd.name
    assert np.array_equal(back.cocycle.generators, sd.cocycle.generators)
    assert np.array_equal(back.sft.adjacency, sd.sft.adjacency)
    assert np.array_equal(back.roof.values, sd.roof.values)


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_shipped_files_match_builtins(name):
    back = load_system(REPO_SYSTEMS / f"{name}.sys")
    assert np.array_equal(back.cocycle.generators, builtin(name).cocycle.generators)


@pytest.mark.parametrize("text, key, line", [
    (GOOD.replace("adjacency = 1 1; 1 0", "adjacency = 1 1; 1"), "adjacency", 4),
    (GOOD.replace("adjacency = 1 1; 1 0", "adjacency = 1 1; 1 2"), "adjacency", 4),
    (GOOD.replace("generator.1 = 0.5 0 0  0 3 0  0 0 5\n", ""), "generator.1", 0),
    (GOOD.replace("0 0 4", "0 0 x"), "generator.0", 6),
    (GOOD.replace("0 0 4", "0 0"), "generator.0", 6),
    (GOOD.replace("split = 1,2", "split = 1,1"), "generator.0", 6),
    (GOOD.replace("split = 1,2", "split = one"), "split", 5),
    (GOOD.replace("roof.1 = 2", "roof.1 = -2"), "roof.1", 9),
    (GOOD.replace("roof.1 = 2\n", ""), "roof.1", 0),
    (GOOD + "colour = red\n", "colour", 11),
    (GOOD + "roof.1 = 3\n", "roof.1", 11),
    (GOOD + "generator.2 = 1 0 0 0 1 0 0 0 1\n", "generator.2", 11),
    (GOOD.replace("markov_transition = 0.5 0.5; 1 0", "markov_transition = 0.5 0.5; 0.5 0.5"),
     "markov_transition", 10),
    (GOOD.replace("alphabet_size = 2", "alphabet_size = two"), "alphabet_size", 3),
])
def test_errors_name_key_and_line(text, key, line):
    with pytest.raises(SystemFileError) as e:
        parse_system(text, "bad.sys")
    assert e.value.key == key
    assert e.value.line == line
    assert "bad.sys" in str(e.value)


def test_missing_file(tmp_path):
    with pytest.raises(SystemFileError, match="cannot read"):
        load_system(tmp_path / "nope.sys")


def test_no_equals_sign():
    with pytest.raises(SystemFileError) as e:
        parse_system("name golden\n")
    assert e.value.line == 1
