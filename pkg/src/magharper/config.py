"""Building groups and multipliers from plain dict descriptions and back.

The same descriptors are used by the experiment config files and by the
operator JSON format, so every object that can be written can be read.
"""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources

from .cocycle import MagneticZ2, Multiplier, Pullback, SymplecticLattice, Trivial
from .errors import DomainError
from .groups import (ExtensionElement, FreeGroupModel, FreeWord, GroupModel, Heisenberg,
                     HeisenbergModel, Lamplighter, LamplighterModel, Lattice, LatticeModel,
                     abelianize_heisenberg)


def parse_fraction(value) -> Fraction:
    """``"p/q"``, ``[p, q]`` or an integer."""
    if isinstance(value, bool):
        raise DomainError(f"not a fraction: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"not a fraction: {value!r}") from None
    if isinstance(value, (list, tuple)) and len(value) == 2:
        if value[1] == 0:
            raise DomainError("zero denominator")
        return Fraction(int(value[0]), int(value[1]))
    raise DomainError(f"not a fraction: {value!r}")


def _fraction_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


# ---------------------------------------------------------------- elements

def encode_element(g):
    if isinstance(g, Lattice):
        return list(g.coords)
    if isinstance(g, Heisenberg):
        return [g.x, g.y, g.z]
    if isinstance(g, Lamplighter):
        return {"lamps": list(g.lamps), "shift": g.shift}
    if isinstance(g, FreeWord):
        return list(g.letters)
    if isinstance(g, ExtensionElement):
        return {"k": g.k, "base": encode_element(g.base)}
    raise DomainError(f"cannot encode {g!r}")


def decode_element(model: GroupModel, data):
    fam = model.family
    try:
        if fam == "lattice":
            g = Lattice(tuple(data))
        elif fam == "heisenberg":
            g = Heisenberg(*(int(v) for v in data))
        elif fam == "lamplighter":
            g = Lamplighter(tuple(data["lamps"]), int(data["shift"]))
        elif fam == "free":
            g = FreeWord(tuple(data))
        else:
            raise DomainError(f"cannot decode elements of the {fam} family")
    except (TypeError, KeyError, ValueError) as exc:
        raise DomainError(f"bad element {data!r}: {exc}") from None
    model.check(g)
    return g


# ---------------------------------------------------------------- groups

def build_group(cfg: dict) -> GroupModel:
    cfg = dict(cfg)
    family = cfg.pop("family")
    gens_raw = cfg.pop("generators", None)
    quotient = cfg.pop("quotient", None)
    if family in ("lattice", "z2"):
        dim = cfg.pop("dim", 2)
        moduli = cfg.pop("moduli", None)
        make = lambda gens: LatticeModel(dim, moduli=moduli, generators=gens, quotient=quotient)
    elif family == "heisenberg":
        modulus = cfg.pop("modulus", None)
        make = lambda gens: HeisenbergModel(gens, modulus=modulus, quotient=quotient)
    elif family == "lamplighter":
        cycle = cfg.pop("cycle", None)
        make = lambda gens: LamplighterModel(gens, cycle=cycle, quotient=quotient)
    elif family == "free":
        if quotient is not None:
            raise DomainError("free groups have no configured quotient")
        rank = cfg.pop("rank", 2)
        make = lambda gens: FreeGroupModel(rank, generators=gens)
    else:
        raise DomainError(f"unknown group family {family!r}")
    if cfg:
        raise DomainError(f"unknown group keys {sorted(cfg)}")
    model = make(None)
    if gens_raw is not None:
        model = make([decode_element(model, g) for g in gens_raw])
    return model


def group_config(model: GroupModel) -> dict:
    if isinstance(model, LatticeModel):
        out = {"family": "lattice", "dim": model.dim}
        if model.moduli is not None:
            out["moduli"] = list(model.moduli)
        q = model.quotient_model
        if q is not None:
            out["quotient"] = list(q.moduli)
    elif isinstance(model, HeisenbergModel):
        out = {"family": "heisenberg"}
        if model.modulus is not None:
            out["modulus"] = model.modulus
        if model.quotient_model is not None:
            out["quotient"] = model.quotient_model.modulus
    elif isinstance(model, LamplighterModel):
        out = {"family": "lamplighter"}
        if model.cycle is not None:
            out["cycle"] = model.cycle
        if model.quotient_model is not None:
            out["quotient"] = model.quotient_model.cycle
    elif isinstance(model, FreeGroupModel):
        out = {"family": "free", "rank": model.rank}
    else:
        raise DomainError(f"{model!r} has no config form")
    if set(model.generators) != set(model.default_generators()):
        out["generators"] = [encode_element(g) for g in model.generators]
    return out


# ---------------------------------------------------------------- multipliers

def _number_or_fraction(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return value
    return parse_fraction(value)


def build_multiplier(cfg: dict | None, model: GroupModel) -> Multiplier:
    if cfg is None:
        return Trivial()
    cfg = dict(cfg)
    kind = cfg.pop("kind", "magnetic_z2" if "flux" in cfg else "trivial")
    declared = cfg.pop("order", None)
    if kind == "trivial":
        sigma: Multiplier = Trivial()
    elif kind == "magnetic_z2":
        if "flux" in cfg:
            if "alpha1" in cfg or "alpha2" in cfg:
                raise DomainError("give either flux or alpha1/alpha2")
            f = parse_fraction(cfg.pop("flux"))
            sigma = MagneticZ2.from_turns(0, f)
        else:
            a1, a2 = cfg.pop("alpha1", 0.0), cfg.pop("alpha2", 0.0)
            if isinstance(a1, str) or isinstance(a2, str):
                # strings are exact turns, e.g. "1/3" = 2 pi / 3 radians
                sigma = MagneticZ2.from_turns(parse_fraction(a1), parse_fraction(a2))
            else:
                sigma = MagneticZ2(float(a1), float(a2))
        if isinstance(model, HeisenbergModel):
            sigma = Pullback(abelianize_heisenberg, sigma)
        elif not (isinstance(model, LatticeModel) and model.dim == 2):
            raise DomainError("magnetic_z2 needs Z^2 or the Heisenberg group")
    elif kind == "symplectic":
        if not (isinstance(model, LatticeModel) and model.dim % 2 == 0):
            raise DomainError("symplectic multipliers live on even-dimensional lattices")
        sigma = SymplecticLattice(_number_or_fraction(cfg.pop("theta", 0)), model.dim // 2)
    else:
        raise DomainError(f"unknown multiplier kind {kind!r}")
    if cfg:
        raise DomainError(f"unknown multiplier keys {sorted(cfg)}")
    if declared is not None:
        if sigma.order is None or declared % sigma.order:
            raise DomainError(f"declared order {declared} is not a multiple of the true order {sigma.order}")
    return sigma


def multiplier_config(sigma: Multiplier) -> dict:
    if isinstance(sigma, Trivial):
        return {"kind": "trivial"}
    if isinstance(sigma, Pullback) and sigma.project is abelianize_heisenberg:
        return multiplier_config(sigma.inner)
    if isinstance(sigma, MagneticZ2):
        if sigma.turns is not None:
            t1, t2 = sigma.turns
            if t1 == 0:
                return {"kind": "magnetic_z2", "flux": _fraction_str(t2)}
            return {"kind": "magnetic_z2", "alpha1": _fraction_str(t1), "alpha2": _fraction_str(t2)}
        return {"kind": "magnetic_z2", "alpha1": sigma.alpha1, "alpha2": sigma.alpha2}
    if isinstance(sigma, SymplecticLattice):
        th = sigma.theta_turns
        return {"kind": "symplectic", "theta": _fraction_str(th) if th is not None else sigma.theta}
    raise DomainError(f"{sigma!r} has no config form")


# ---------------------------------------------------------------- experiment configs

def schema() -> dict:
    return json.loads(resources.files("magharper").joinpath("config.schema.json").read_text())


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DomainError(f"config {path} is not valid JSON: {exc}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(cfg, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DomainError(f"config invalid at {where}: {exc.message}") from None

