"""Registry of the named sequences: rules, displayed matrices and constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .automaton import Automaton, build
from .errors import OddCoeffsError
from .gf2poly import RecurrenceSpec

LN2 = math.log(2)


@dataclass(frozen=True)
class Fixture:
    D0: tuple
    D1: tuple
    w: tuple


@dataclass(frozen=True)
class Constants:
    """Published reference values; ``None`` where none is given."""

    avg_exponent: float | None = None
    avg_exponent_text: str | None = None
    perron_poly: tuple[int, ...] | None = None  # minimal poly of the Perron root, highest first
    growth_min_poly: tuple[int, ...] | None = None
    lam: float | None = None
    lam_text: str | None = None
    lam_tolerance: float | None = None
    lam_method: str | None = None  # "series" or "monte_carlo"
    variance_min_poly: tuple[int, ...] | None = None  # for the halved Kronecker root
    variance_root: Fraction | float | None = None
    jensen_bound: float | None = None  # truncated average exponent quoted beside lambda
    oeis_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    spec: RecurrenceSpec
    fixture: Fixture | None = None
    constants: Constants = field(default_factory=Constants)
    direct: Fixture | None = None  # matrices used in place of the builder

    def automaton(self) -> Automaton:
        return automaton_for(self.name)


def _fx(D0, D1, w) -> Fixture:
    return Fixture(tuple(map(tuple, D0)), tuple(map(tuple, D1)), tuple(w))


_PRESETS: dict[str, Preset] = {}


def _register(p: Preset) -> None:
    _PRESETS[p.name] = p


_register(Preset(
    "binomial", "(1 + x)^n",
    RecurrenceSpec.first_order("1,1"),
    fixture=_fx([[1]], [[2]], [1]),
    constants=Constants(
        avg_exponent=math.log(1.5) / LN2,
        avg_exponent_text="0.5849625007211561814537389",
        perron_poly=(1, -3),
        lam=LN2 / 2, lam_tolerance=1e-6, lam_method="exact",
        variance_min_poly=(2, -5), variance_root=Fraction(5, 2),
        oeis_ids=("A001316", "A000120", "A006046", "A000788", "A007318")),
))

_register(Preset(
    "trinomial", "(1 + x + x^2)^n",
    RecurrenceSpec.first_order("1,1,1"),
    fixture=_fx([[1, 2], [0, 0]], [[1, 2], [1, 0]], [1, 2]),
    constants=Constants(
        avg_exponent=math.log((1 + math.sqrt(5)) / 2) / LN2,
        avg_exponent_text="0.6942419136306173017387902",
        perron_poly=(1, -2, -4),
        lam=0.4299474333424527, lam_text="0.4299474333424527201146970",
        lam_tolerance=1e-10, lam_method="series",
        variance_min_poly=(1, -2, -3, 2),
        oeis_ids=("A071053", "A134659", "A027907")),
))

_register(Preset(
    "quadrinomial", "(1 + x + x^2 + x^3)^n",
    RecurrenceSpec.first_order("1,1,1,1"),
    fixture=_fx([[1, 2, 0], [0, 0, 1], [0, 0, 0]],
                [[0, 0, 0], [2, 0, 0], [0, 1, 2]], [1, 2, 2]),
    constants=Constants(
        avg_exponent=math.log(1.5) / LN2,
        avg_exponent_text="0.5849625007211561814537389",
        perron_poly=(1, -3),
        lam=LN2 / 2, lam_tolerance=1e-6, lam_method="series",
        oeis_ids=("A134660", "A036555", "A008287")),
))

_register(Preset(
    "trinomial2", "(1 + x + x^3)^n",
    RecurrenceSpec.first_order("1,1,0,1"),
    fixture=_fx([[1, 2, 1, 0], [0, 0, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0]],
                [[1, 1, 1, 0], [1, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 1]], [1, 2, 3, 2]),
    constants=Constants(
        avg_exponent=0.7274509132400228,
        avg_exponent_text="0.7274509132400228143266172",
        growth_min_poly=(1, -3, -2, 2, 4),
        oeis_ids=("A134661", "A038717")),
))

_register(Preset(
    "h4", "(1 + x + x^4)^n",
    RecurrenceSpec.first_order("1,1,0,0,1"),
    constants=Constants(
        lam=0.45759385431410, lam_text="0.45759385431410",
        lam_tolerance=1e-6, lam_method="series",
        jensen_bound=0.736,
        oeis_ids=("A134662", "A134663")),
))

_register(Preset(
    "quintinomial", "(1 + x + x^2 + x^3 + x^4)^n",
    RecurrenceSpec.first_order("1,1,1,1,1"),
    fixture=_fx([[1, 1, 2, 0], [0, 0, 0, 0], [0, 1, 0, 2], [0, 0, 0, 0]],
                [[0, 1, 2, 0], [1, 0, 0, 0], [1, 0, 0, 2], [0, 1, 0, 0]], [1, 3, 2, 4]),
    constants=Constants(
        avg_exponent=0.7896418505307686,
        avg_exponent_text="0.7896418505307685639015472",
        growth_min_poly=(1, -1, -6, -4, -16),
        oeis_ids=("A035343",)),
))

_register(Preset(
    "sextinomial", "(1 + x + ... + x^5)^n",
    RecurrenceSpec.first_order("1,1,1,1,1,1"),
    fixture=_fx([[1, 1, 2, 2, 0, 0], [0, 0, 0, 0, 0, 0], [0, 1, 0, 0, 1, 1],
                 [0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 1, 0]],
                [[0, 0, 0, 0, 0, 0], [2, 2, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0],
                 [0, 0, 1, 1, 2, 2], [0, 0, 0, 1, 0, 0], [0, 0, 0, 0, 0, 0]],
                [1, 3, 2, 2, 4, 2]),
    constants=Constants(
        avg_exponent=0.8194694621655401,
        avg_exponent_text="0.8194694621655401465959376",
        growth_min_poly=(1, -4, 1, -1, 8, 11, 8),
        lam=0.5344481528, lam_text="0.5344481528",
        lam_tolerance=1e-6, lam_method="series",
        jensen_bound=0.819,
        oeis_ids=("A063260",)),
))

_register(Preset(
    "septinomial", "(1 + x + ... + x^6)^n",
    RecurrenceSpec.first_order("1,1,1,1,1,1,1"),
    fixture=_fx([[1, 0, 1, 2, 0, 0], [0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 1, 2],
                 [0, 2, 1, 0, 1, 0], [0, 0, 0, 0, 0, 0], [0, 0, 0, 0, 0, 0]],
                [[0, 0, 0, 2, 1, 0], [1, 0, 0, 0, 0, 0], [1, 0, 0, 0, 0, 2],
                 [0, 2, 1, 0, 0, 0], [0, 0, 1, 0, 0, 0], [0, 0, 0, 0, 1, 0]],
                [1, 4, 3, 2, 5, 6]),
    constants=Constants(
        avg_exponent=0.8317963967344407,
        avg_exponent_text="0.8317963967344406899938931",
        growth_min_poly=(1, -1, -2, -28, 0, 16, 64),
        lam=0.53765282, lam_text="0.53765282",
        lam_tolerance=1e-6, lam_method="series",
        jensen_bound=0.831,
        oeis_ids=("A063265",)),
))

_register(Preset(
    "rhombus", "p_n = (1 + x + x^2) p_{n-1} + x^2 p_{n-2}",
    RecurrenceSpec.second_order("1,1,1", "0,0,1", "1", "1,1,1", ell=4),
    fixture=_fx([[0, 1, 0, 0, 0], [1, 0, 2, 0, 0], [0, 0, 0, 0, 0], [0, 1, 0, 0, 1], [0, 0, 0, 2, 1]],
                [[1, 0, 2, 0, 0], [0, 0, 0, 2, 1], [1, 1, 0, 0, 0], [0, 0, 0, 0, 0], [0, 1, 0, 0, 0]],
                [1, 1, 2, 0, 0]),
    constants=Constants(
        avg_exponent=math.log((3 + math.sqrt(17)) / 4) / LN2,
        avg_exponent_text="0.8325063835804514437981667",
        perron_poly=(1, -3, -2),
        lam=0.57331379313, lam_text="0.57331379313",
        lam_tolerance=None, lam_method="monte_carlo",
        variance_min_poly=(4, -8, -25, 22, 24, 16, 1, -2),
        oeis_ids=("A059319", "A059317")),
))

_register(Preset(
    "stern", "Fibonacci polynomials p_n = x p_{n-1} + p_{n-2}",
    RecurrenceSpec.second_order("0,1", "1", "1", "0,1", ell=2),
    fixture=_fx([[1, 0], [1, 1]], [[1, 1], [0, 1]], [1, 0]),
    direct=_fx([[1, 0], [1, 1]], [[1, 1], [0, 1]], [1, 0]),
    constants=Constants(
        avg_exponent=math.log(1.5) / LN2,
        avg_exponent_text="0.5849625007211561814537389",
        perron_poly=(1, -3),
        lam=0.396212564297744, lam_text="0.396212564297744",
        lam_tolerance=None, lam_method="monte_carlo",
        variance_min_poly=(2, -5, 1),
        oeis_ids=("A002487", "A049310")),
))

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> Preset:
    try:
        return _PRESETS[name]
    except KeyError:
        raise OddCoeffsError(
            f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None


@lru_cache(maxsize=None)
def automaton_for(name: str) -> Automaton:
    """Build (once) the automaton of a preset.

    Presets with ``direct`` matrices use them as given; the window builder is
    not consulted for them.
    """
    p = preset(name)
    if p.direct is not None:
        d = p.direct
        return Automaton.from_matrices(d.D0, d.D1, d.w, order=p.spec.order,
                                       ell=p.spec.ell, spec=p.spec)
    return build(p.spec)
