"""Job-hiring environment: build a strong team while treating applicants fairly.

Each timestep presents one applicant sampled from a configurable population
alongside the company's current composition. Hiring (or rejecting) yields a
noisy reward derived from an objective goodness score that measures how much
the applicant would improve the team; the ground-truth action (hire iff the
goodness reaches the threshold) is revealed as feedback every step. Employees
leave over time according to per-age attrition probabilities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..features import NOMINAL, NUMERIC, FeatureSchema, FeatureVector
from ..episode import StepResult

GENDERS = ("man", "woman")
NATIONALITIES = ("belgian", "foreign")
LANGUAGES = ("dutch", "french", "english", "german")
COMPANY_FEATURES = ("potential", "degrees", "extra_degrees", "experience", "language_entropy")

HIRE, REJECT = 1, 0
GOODNESS_THRESHOLD = 0.5

#: per-step attrition equivalent to a flat 2% monthly rate, one step per day(ish)
_DEFAULT_ATTRITION_STEP = 1.0 - 0.98 ** (1.0 / 30.0)

DEFAULT_JOINT = {
    ("belgian", "man"): 0.30,
    ("belgian", "woman"): 0.31,
    ("foreign", "man"): 0.20,
    ("foreign", "woman"): 0.19,
}


def _skew_gender(joint: dict, men_share: float) -> dict:
    """Rescale a joint table to a target gender marginal, keeping nationality mixes."""
    men = {k: v for k, v in joint.items() if k[1] == "man"}
    women = {k: v for k, v in joint.items() if k[1] == "woman"}
    men_total, women_total = sum(men.values()), sum(women.values())
    out = {k: v / men_total * men_share for k, v in men.items()}
    out.update({k: v / women_total * (1.0 - men_share) for k, v in women.items()})
    return out


@dataclass(frozen=True)
class PopulationSpec:
    """Distribution tables the applicant generator samples from."""

    joint: dict = field(default_factory=lambda: dict(DEFAULT_JOINT))
    age_min: int = 18
    age_max: int = 65
    degree_p: float = 0.4
    extra_degree_p: float = 0.3  # conditional on holding a degree
    married_p: float = 0.45
    language_p: tuple[float, ...] = (0.60, 0.40, 0.20, 0.10)
    #: (age_lo, age_hi, per-step leave probability) brackets, half-open on hi
    attrition_table: tuple[tuple[int, int, float], ...] = (
        (0, 1000, _DEFAULT_ATTRITION_STEP),
    )

    def __post_init__(self):
        if abs(sum(self.joint.values()) - 1.0) > 1e-9:
            raise ValueError("joint population proportions must sum to 1")
        if len(self.language_p) != len(LANGUAGES):
            raise ValueError(f"expected {len(LANGUAGES)} language prevalences")

    def attrition_probability(self, age: int) -> float:
        for lo, hi, p in self.attrition_table:
            if lo <= age < hi:
                return p
        return 0.0

    @classmethod
    def preset(cls, name: str) -> "PopulationSpec":
        if name == "default":
            return cls()
        if name == "gender":
            return cls(joint=_skew_gender(DEFAULT_JOINT, men_share=0.70))
        if name == "nationality_gender":
            return cls(
                joint={
                    ("belgian", "man"): 0.40,
                    ("belgian", "woman"): 0.40,
                    ("foreign", "man"): 0.15,
                    ("foreign", "woman"): 0.05,
                }
            )
        raise ValueError(f"unknown population preset {name!r}")


@dataclass(frozen=True)
class BiasSpec:
    """Extra reward granted to a favoured demographic when hiring."""

    kind: str = "none"
    amount: float = 0.1

    _KINDS = ("none", "men", "belgian_men")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown bias kind {self.kind!r}")

    def matches(self, applicant: "Applicant") -> bool:
        if self.kind == "men":
            return applicant.gender == "man"
        if self.kind == "belgian_men":
            return applicant.gender == "man" and applicant.nationality == "belgian"
        return False


@dataclass(frozen=True)
class Applicant:
    gender: str
    nationality: str
    married: bool
    age: int
    degree: bool
    extra_degree: bool
    experience: int
    languages: tuple[bool, bool, bool, bool]

    def groups(self) -> frozenset[str]:
        return frozenset({f"gender:{self.gender}", f"nationality:{self.nationality}"})


def max_experience(age: int, degree: bool, extra_degree: bool) -> int:
    """Upper bound on work experience given age and study years."""
    return max(0, age - 18 - 3 * int(degree) - 2 * int(extra_degree))


def experience_probability(year: int, max_e: int) -> float:
    """Linearly increasing probability of each experience year in [0, max_e]."""
    if not 0 <= year <= max_e:
        return 0.0
    return (year + 1) / sum(y + 1 for y in range(max_e + 1))


def sample_applicant(population: PopulationSpec, rng: np.random.Generator) -> Applicant:
    keys = sorted(population.joint)
    probs = np.array([population.joint[k] for k in keys])
    nationality, gender = keys[rng.choice(len(keys), p=probs / probs.sum())]
    age = int(rng.integers(population.age_min, population.age_max + 1))
    degree = bool(rng.random() < population.degree_p)
    extra = bool(degree and rng.random() < population.extra_degree_p)
    married = bool(rng.random() < population.married_p)
    max_e = max_experience(age, degree, extra)
    weights = np.arange(1, max_e + 2, dtype=np.float64)
    experience = int(rng.choice(max_e + 1, p=weights / weights.sum()))
    languages = tuple(bool(rng.random() < p) for p in population.language_p)
    return Applicant(gender, nationality, married, age, degree, extra, experience, languages)


def attrition(team: list[Applicant], population: PopulationSpec, rng: np.random.Generator) -> list[Applicant]:
    """Keep each employee with probability 1 - p(age); one draw per employee."""
    if not team:
        return []
    probs = np.array([population.attrition_probability(e.age) for e in team])
    keep = rng.random(len(team)) >= probs
    return [e for e, stay in zip(team, keep) if stay]


def team_features(
    team: list[Applicant],
    team_size: int,
    experience_cap: float,
    potential_noise_sd: float,
    rng: np.random.Generator,
) -> dict[str, float]:
    """The five company-composition features, all normalised into [0, 1]."""
    k = len(team)
    if k:
        mean_potential = (
            sum(
                (int(e.degree != 0) + int(e.extra_degree != 0) + int(e.experience != 0)) / 3.0
                for e in team
            )
            / team_size
        )
        lang_counts = [sum(e.languages[i] for e in team) for i in range(len(LANGUAGES))]
        lang_props = [c / k for c in lang_counts]
    else:
        mean_potential = 0.0
        lang_props = [0.0] * len(LANGUAGES)
    potential = mean_potential + rng.normal(0.0, potential_noise_sd)
    total = sum(lang_props)
    if total > 0:
        entropy = -sum((p / total) * math.log(p / total) for p in lang_props if p > 0)
        entropy /= math.log(len(LANGUAGES))
    else:
        entropy = 0.0
    clip = lambda v: min(1.0, max(0.0, v))
    return {
        "potential": clip(potential),
        "degrees": clip(sum(e.degree for e in team) / team_size),
        "extra_degrees": clip(sum(e.extra_degree for e in team) / team_size),
        "experience": clip(sum(e.experience for e in team) / (team_size * experience_cap)),
        "language_entropy": clip(entropy),
    }


def goodness(current: dict[str, float], estimated: dict[str, float], team_size: int) -> float:
    """Scaled feature improvement a hire would bring, clamped to [-1, 1]."""
    n = len(current)
    total = sum(estimated[f] - current[f] for f in current)
    return min(1.0, max(-1.0, team_size / n * total))


def hire_reward(
    goodness_score: float,
    action: int,
    applicant: Applicant,
    bias: BiasSpec,
    noise: float,
    threshold: float = GOODNESS_THRESHOLD,
) -> float:
    """Noisy reward: hiring pays goodness minus the threshold, rejecting its negation."""
    r_hire = goodness_score - threshold + noise
    if bias.matches(applicant):
        r_hire += bias.amount
    return r_hire if action == HIRE else -r_hire


def feedback(goodness_score: float, threshold: float = GOODNESS_THRESHOLD) -> int:
    """Ground-truth action: hire exactly when the goodness reaches the threshold."""
    return HIRE if goodness_score >= threshold else REJECT


@dataclass(frozen=True)
class HiringConfig:
    team_size: int = 100
    horizon: int = 1000
    threshold: float = GOODNESS_THRESHOLD
    reward_noise_sd: float = 0.01
    potential_noise_sd: float = 0.01
    population: PopulationSpec = field(default_factory=PopulationSpec)
    bias: BiasSpec = field(default_factory=BiasSpec)

    @property
    def experience_cap(self) -> float:
        return float(self.population.age_max - 18)


def applicant_schema(config: HiringConfig) -> FeatureSchema:
    pop = config.population
    return FeatureSchema(
        names=("gender", "nationality", "married", "age", "degree", "extra_degree", "experience", *LANGUAGES),
        kinds=(NOMINAL, NOMINAL, NOMINAL, NUMERIC, NOMINAL, NOMINAL, NUMERIC, *(NOMINAL,) * 4),
        sensitive=(True, True, True, True, False, False, False, False, False, False, False),
        bounds=(None, None, None, (pop.age_min, pop.age_max), None, None, (0.0, config.experience_cap),
                None, None, None, None),
        levels=(2, 2, 2, None, 2, 2, None, 2, 2, 2, 2),
    )


def state_schema(config: HiringConfig) -> FeatureSchema:
    applicant = applicant_schema(config)
    return FeatureSchema(
        names=(*COMPANY_FEATURES, *applicant.names),
        kinds=(*(NUMERIC,) * 5, *applicant.kinds),
        sensitive=(*(False,) * 5, *applicant.sensitive),
        bounds=(*((0.0, 1.0),) * 5, *applicant.bounds),
        levels=(*(None,) * 5, *applicant.levels),
    )


def applicant_vector(schema: FeatureSchema, a: Applicant) -> FeatureVector:
    return FeatureVector(
        schema,
        numeric=(float(a.age), float(a.experience)),
        nominal=(
            GENDERS.index(a.gender),
            NATIONALITIES.index(a.nationality),
            int(a.married),
            int(a.degree),
            int(a.extra_degree),
            *(int(l) for l in a.languages),
        ),
    )


class HiringEnv:
    """Sequential hiring decisions over a sampled applicant stream."""

    n_actions = 2

    def __init__(self, config: HiringConfig | None = None):
        self.config = config or HiringConfig()
        self.state_schema = state_schema(self.config)
        self.individual_schema = applicant_schema(self.config)
        self._rng: np.random.Generator | None = None
        self.team: list[Applicant] = []

    @property
    def horizon(self) -> int:
        return self.config.horizon

    def reset(self, seed: int) -> FeatureVector:
        self._rng = np.random.default_rng(seed)
        self.team = []
        self._present_next()
        return self._state_vector()

    def _present_next(self) -> None:
        cfg = self.config
        self._features = team_features(
            self.team, cfg.team_size, cfg.experience_cap, cfg.potential_noise_sd, self._rng
        )
        self.applicant = sample_applicant(cfg.population, self._rng)
        estimated = team_features(
            self.team + [self.applicant], cfg.team_size, cfg.experience_cap,
            cfg.potential_noise_sd, self._rng,
        )
        self.goodness = goodness(self._features, estimated, cfg.team_size)

    def _state_vector(self) -> FeatureVector:
        applicant_fv = applicant_vector(self.individual_schema, self.applicant)
        return FeatureVector(
            self.state_schema,
            numeric=(*(self._features[f] for f in COMPANY_FEATURES), *applicant_fv.numeric),
            nominal=applicant_fv.nominal,
        )

    def step(self, action: int) -> StepResult:
        if self._rng is None:
            raise RuntimeError("call reset(seed) before step")
        cfg = self.config
        applicant = self.applicant
        noise = float(self._rng.normal(0.0, cfg.reward_noise_sd))
        perf = hire_reward(self.goodness, action, applicant, cfg.bias, noise, cfg.threshold)
        correct = feedback(self.goodness, cfg.threshold)
        individual = applicant_vector(self.individual_schema, applicant)

        self.team = attrition(self.team, cfg.population, self._rng)
        if action == HIRE:
            self.team = self.team + [applicant]
        self._present_next()
        return StepResult(
            next_state=self._state_vector(),
            perf_reward=perf,
            feedback=correct,
            individual=individual,
            groups=applicant.groups(),
            terminated=False,
        )

    def describe(self) -> dict:
        cfg = self.config
        return {
            "scenario": "hiring",
            "actions": {"0": "reject", "1": "hire"},
            "team_size": cfg.team_size,
            "horizon": cfg.horizon,
            "goodness_threshold": cfg.threshold,
            "reward_noise_sd": cfg.reward_noise_sd,
            "potential_noise_sd": cfg.potential_noise_sd,
            "population": {
                "joint": {f"{nat}/{gen}": p for (nat, gen), p in sorted(cfg.population.joint.items())},
                "age_range": [cfg.population.age_min, cfg.population.age_max],
                "degree_p": cfg.population.degree_p,
                "extra_degree_p": cfg.population.extra_degree_p,
                "married_p": cfg.population.married_p,
                "language_p": list(cfg.population.language_p),
                "attrition_table": [list(row) for row in cfg.population.attrition_table],
            },
            "bias": {"kind": cfg.bias.kind, "amount": cfg.bias.amount},
            "groups": ["gender:man", "gender:woman", "nationality:belgian", "nationality:foreign"],
        }
