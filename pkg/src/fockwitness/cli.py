"""Command-line front end.

Subcommands::

    fockwitness witness   --config run.yaml            one row per witness report
    fockwitness scan      --config scan.yaml           witness margins on a parameter grid
    fockwitness evolve    --config run.yaml            output moments after the device pipeline
    fockwitness formula   <id> --params "{k1: 3, k2: 0}"
    fockwitness reproduce <II|III|IV|V>                curated checks with a pass/fail manifest

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
failures.  ``reproduce`` exits 1 when any check fails.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import yaml

from . import devices, formulas
from . import witnesses as wit
from .errors import ConfigError, NumericalFailure, TruncationOverflow
from .fock import OVERFLOW_TOL, Mixture, PureState, State, embed, moment_table
from .params import AmplifierParams, BeamSplitterParams, MomentSet, SqueezerParams
from .states import as_complex, build_state

ENV_OUT_DIR = "FOCKWITNESS_OUT_DIR"
FORMATS = ("csv", "json")
DEVICES = ("beam_splitter", "squeezer", "phase_shift", "displacement", "amplifier")
WITNESSES = ("hz_product", "hz_sum", "hz_central", "duan_simon", "tripartite")
SINGLE_MODE_FAMILIES = {"coherent", "number", "squeezed_vacuum", "number_superposition", "thermal"}
THREE_MODE_FAMILIES = {"w_single_photon", "w_coherent"}


# -- formatting -------------------------------------------------------------------


def fmt_float(x: float) -> str:
    """12 significant digits, always in scientific notation."""
    return f"{float(x) + 0.0:.11e}"


def _flatten(row: dict, missing: Any = "") -> dict:
    out = {}
    for key, value in row.items():
        if isinstance(value, (complex, np.complexfloating)):
            out[f"{key}_re"] = fmt_float(value.real)
            out[f"{key}_im"] = fmt_float(value.imag)
        elif isinstance(value, (bool, np.bool_)):
            out[key] = "true" if value else "false"
        elif isinstance(value, (float, np.floating)):
            out[key] = fmt_float(value)
        elif value is None:
            out[key] = missing
        else:
            out[key] = value
    return out


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([_flatten(r, None) for r in rows], indent=2) + "\n"
    flat = [_flatten(r) for r in rows]
    columns: list[str] = []
    for r in flat:
        columns += [k for k in r if k not in columns]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in flat:
        writer.writerow({c: r.get(c, "") for c in columns})
    return buf.getvalue()


# -- configuration ---------------------------------------------------------------


@dataclass(frozen=True)
class ScanAxis:
    param: str
    values: tuple[float, ...]

    @classmethod
    def from_dict(cls, d: dict) -> "ScanAxis":
        if "param" not in d:
            raise ConfigError("scan axis needs 'param'")
        if "values" in d:
            values = tuple(float(v) for v in d["values"])
        else:
            try:
                start, stop, steps = float(d["start"]), float(d["stop"]), int(d["steps"])
            except KeyError as exc:
                raise ConfigError(f"scan axis needs 'values' or start/stop/steps, missing {exc}") from None
            if steps < 1:
                raise ConfigError("scan steps must be >= 1")
            values = tuple(float(v) for v in np.linspace(start, stop, steps))
        if not values:
            raise ConfigError(f"scan axis {d['param']!r} has no values")
        # rows come out in lexicographic order of the axis values
        return cls(str(d["param"]), tuple(sorted(set(values))))

    def to_dict(self) -> dict:
        return {"param": self.param, "values": list(self.values)}


def _path_parts(path: str) -> list:
    return [int(p) if p.isdigit() else p for p in path.split(".")]


def _get_path(tree: Any, path: str) -> Any:
    node = tree
    for part in _path_parts(path):
        try:
            node = node[part]
        except (KeyError, IndexError, TypeError):
            raise ConfigError(f"scan parameter {path!r} is not declared in the config") from None
    return node


def _set_path(tree: Any, path: str, value: Any) -> None:
    parts = _path_parts(path)
    node = _get_path(tree, ".".join(str(p) for p in parts[:-1])) if len(parts) > 1 else tree
    node[parts[-1]] = value


def _family_modes(spec: dict) -> int:
    fam = spec.get("family")
    params = spec.get("params", {}) or {}
    if fam in SINGLE_MODE_FAMILIES:
        return 1
    if fam in THREE_MODE_FAMILIES:
        return 3
    if fam == "vacuum":
        return int(params.get("modes", 2))
    if fam == "product":
        return sum(_family_modes(s) for s in params.get("modes", []))
    if fam == "displaced":
        return _family_modes(params.get("base", {}))
    return 2


def _device_modes(step: dict) -> list[int]:
    dev = step.get("device")
    if dev in ("beam_splitter", "squeezer"):
        return [int(m) for m in step.get("modes", (0, 1))]
    if dev in ("phase_shift", "displacement"):
        return [int(step.get("mode", 0))]
    return [0, 1]


@dataclass
class RunConfig:
    """Everything one CLI run needs: state, device pipeline, witnesses, scan axes, output."""

    state: dict
    pipeline: list[dict] = field(default_factory=list)
    witnesses: list[dict] = field(default_factory=list)
    scan: list[ScanAxis] = field(default_factory=list)
    output_format: str = "csv"
    output_path: str | None = None
    cutoffs: tuple[int, ...] | None = None
    tolerance: float = wit.MARGIN_TOL

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(d) - {"state", "pipeline", "witnesses", "scan", "output", "cutoffs", "tolerance", "modes"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        state = d.get("state")
        if not isinstance(state, dict) or "family" not in state:
            raise ConfigError("config needs a 'state' mapping with a 'family'")
        n_modes = int(d.get("modes", _family_modes(state)))
        pipeline = [dict(p) for p in d.get("pipeline", []) or []]
        for step in pipeline:
            if step.get("device") not in DEVICES:
                raise ConfigError(f"unknown device {step.get('device')!r}; expected one of {DEVICES}")
            modes = _device_modes(step)
            if any(not 0 <= m < n_modes for m in modes) or len(set(modes)) != len(modes):
                raise ConfigError(f"device {step['device']} modes {modes} invalid for {n_modes} modes")
        wits = [dict(w) for w in d.get("witnesses", []) or []]
        for w in wits:
            if w.get("type") not in WITNESSES:
                raise ConfigError(f"unknown witness {w.get('type')!r}; expected one of {WITNESSES}")
        output = d.get("output", {}) or {}
        fmt = output.get("format", "csv")
        if fmt not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}")
        cutoffs = d.get("cutoffs")
        cfg = cls(
            state=copy.deepcopy(state),
            pipeline=pipeline,
            witnesses=wits,
            scan=[ScanAxis.from_dict(a) for a in d.get("scan", []) or []],
            output_format=fmt,
            output_path=output.get("path"),
            cutoffs=tuple(int(c) for c in cutoffs) if cutoffs is not None else None,
            tolerance=float(d.get("tolerance", wit.MARGIN_TOL)),
        )
        if len(cfg.scan) > 2:
            raise ConfigError("at most two scan axes are supported")
        tree = cfg.tree()
        for axis in cfg.scan:
            _get_path(tree, axis.param)
        return cfg

    def tree(self) -> dict:
        """The parameter tree that scan paths address."""
        return {"state": self.state, "pipeline": self.pipeline, "witnesses": self.witnesses}

    def to_dict(self) -> dict:
        out: dict = {"state": copy.deepcopy(self.state)}
        if self.pipeline:
            out["pipeline"] = copy.deepcopy(self.pipeline)
        if self.witnesses:
            out["witnesses"] = copy.deepcopy(self.witnesses)
        if self.scan:
            out["scan"] = [a.to_dict() for a in self.scan]
        output = {"format": self.output_format}
        if self.output_path:
            output["path"] = self.output_path
        out["output"] = output
        if self.cutoffs is not None:
            out["cutoffs"] = list(self.cutoffs)
        out["tolerance"] = self.tolerance
        return out

    def with_values(self, assignments: dict[str, float]) -> "RunConfig":
        tree = copy.deepcopy(self.tree())
        for path, value in assignments.items():
            _set_path(tree, path, value)
        return RunConfig(tree["state"], tree["pipeline"], tree["witnesses"], [],
                         self.output_format, self.output_path, self.cutoffs, self.tolerance)


def load_config(path: str | os.PathLike) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return RunConfig.from_dict(data)


# -- execution --------------------------------------------------------------------


def _retruncate(state: State, cutoffs: tuple[int, ...]) -> State:
    if len(cutoffs) == 1:
        cutoffs = cutoffs * state.n_modes
    if len(cutoffs) != state.n_modes:
        raise ConfigError(f"--cutoff needs 1 or {state.n_modes} values")
    if isinstance(state, Mixture):
        return Mixture(state.weights, tuple(_retruncate(s, cutoffs) for s in state.states))
    if not isinstance(state, PureState):
        raise ConfigError("cutoff overrides apply to pure states and mixtures only")
    amps = state.amplitudes
    keep = tuple(slice(0, min(c + 1, d)) for c, d in zip(cutoffs, amps.shape))
    kept = amps[keep]
    lost = 1.0 - float(np.vdot(kept, kept).real)
    if lost > OVERFLOW_TOL:
        raise TruncationOverflow(f"cutoffs {cutoffs} discard weight {lost:.3e} of the input state")
    small = PureState(kept / np.linalg.norm(kept))
    return embed(small, cutoffs)


def _beam_splitter_params(step: dict) -> BeamSplitterParams:
    if "theta" in step:
        return BeamSplitterParams.from_angle(float(step["theta"]), float(step.get("phase_t", 0)),
                                             float(step.get("phase_r", 0)))
    if "t" in step:
        return BeamSplitterParams(as_complex(step["t"]), as_complex(step["r"]))
    if "r" in step:
        r = as_complex(step["r"])
        return BeamSplitterParams(math.sqrt(max(0.0, 1 - abs(r) ** 2)), r)
    raise ConfigError("beam_splitter needs t and r, r alone, or theta")


def _squeezer_params(step: dict) -> SqueezerParams:
    if "c" in step:
        return SqueezerParams(float(step["c"]), as_complex(step["s"]))
    if "r" in step:
        return SqueezerParams.from_r(float(step["r"]), float(step.get("phase", 0.0)))
    raise ConfigError("squeezer needs c and s, or r (and optional phase)")


def _amp_params(step: dict) -> AmplifierParams:
    try:
        return AmplifierParams(*(float(step[k]) for k in ("A_a", "C_a", "A_b", "C_b")), float(step.get("t", 0)))
    except KeyError as exc:
        raise ConfigError(f"amplifier is missing rate {exc}") from None


def apply_pipeline(state: State, pipeline: Sequence[dict], cutoffs: tuple[int, ...] | None = None) -> State:
    for step in pipeline:
        dev = step["device"]
        if dev == "beam_splitter":
            state = devices.beam_splitter(state, tuple(step.get("modes", (0, 1))), _beam_splitter_params(step))
        elif dev == "squeezer":
            state = devices.two_mode_squeezer(state, tuple(step.get("modes", (0, 1))), _squeezer_params(step))
        elif dev == "phase_shift":
            state = devices.phase_shift(state, int(step.get("mode", 0)), float(step["phi"]))
        elif dev == "displacement":
            state = devices.displacement(state, int(step.get("mode", 0)), as_complex(step["alpha"]))
        elif dev == "amplifier":
            cut = step.get("cutoff", max(cutoffs) if cutoffs else None)
            dt = step.get("dt")
            state = devices.lindblad_evolve(state, _amp_params(step), None if dt is None else float(dt),
                                            cutoff=None if cut is None else int(cut))
    return state


def prepare_state(cfg: RunConfig) -> State:
    state = build_state(cfg.state)
    if cfg.cutoffs is not None:
        state = _retruncate(state, cfg.cutoffs)
    return apply_pipeline(state, cfg.pipeline, cfg.cutoffs)


def evaluate_witnesses(state: State, specs: Sequence[dict], tolerance: float) -> list[dict]:
    rows = []
    for spec in specs or [{"type": "hz_product"}]:
        kind = spec["type"]
        modes = tuple(int(m) for m in spec.get("modes", (0, 1)))
        m, n = int(spec.get("m", 1)), int(spec.get("n", 1))
        if kind == "tripartite":
            res = wit.tripartite_genuine(state, tolerance)
            for rep in (res.ab, res.bc):
                rows.append({**rep.record(), "genuine": res.genuine})
            continue
        if kind == "hz_product":
            rep = wit.hz_product(state, m, n, modes, tolerance)
        elif kind == "hz_sum":
            rep = wit.hz_sum(state, m, n, modes, tolerance)
        elif kind == "hz_central":
            rep = wit.hz_central(state, modes, tolerance)
        else:
            xi = spec.get("xi", "auto")
            rep = wit.duan_simon(state, xi if xi == "auto" else float(xi), modes, tolerance)
        rows.append(rep.record())
    return rows


def run_witness(cfg: RunConfig) -> list[dict]:
    return evaluate_witnesses(prepare_state(cfg), cfg.witnesses, cfg.tolerance)


def run_evolve(cfg: RunConfig) -> list[dict]:
    state = prepare_state(cfg)
    if state.n_modes < 2:
        raise ConfigError("evolve reports two-mode moments; the state has one mode")
    ms = MomentSet.from_state(state)
    return [{"ab_dag": ms.ab_dag, "na_nb": ms.na_nb, "na": ms.na, "nb": ms.nb, "witness": ms.witness}]


def run_scan(cfg: RunConfig, runner: Callable[[RunConfig], list[dict]] = run_witness,
             workers: int | None = None) -> list[dict]:
    """Evaluate every grid point (lexicographic in axis values); row order is deterministic."""
    if not cfg.scan:
        raise ConfigError("scan needs at least one axis under 'scan'")
    names = [a.param for a in cfg.scan]
    points = list(itertools.product(*(a.values for a in cfg.scan)))

    def one(point):
        rows = runner(cfg.with_values(dict(zip(names, point))))
        return [{**dict(zip(names, point)), **row} for row in rows]

    with ThreadPoolExecutor(max_workers=workers or min(8, os.cpu_count() or 1)) as pool:
        results = list(pool.map(one, points))
    return [row for rows in results for row in rows]


# -- formulas ---------------------------------------------------------------------


def _sq_params(p: dict) -> SqueezerParams:
    return _squeezer_params(p)


def _a_table(p: dict) -> dict:
    if "a_state" not in p:
        raise ConfigError("this formula needs 'a_state', a single-mode state spec")
    state = build_state(p["a_state"])
    if state.n_modes != 1:
        raise ConfigError("'a_state' must be a single-mode state")
    return moment_table(state, 4)


def _bs(p: dict) -> BeamSplitterParams:
    return _beam_splitter_params(p) if any(k in p for k in ("t", "r", "theta")) else BeamSplitterParams.balanced()


def _moment_row(ms: MomentSet) -> dict:
    return {"ab_dag": ms.ab_dag, "na_nb": ms.na_nb, "na": ms.na, "nb": ms.nb}


def _formula_photon_added(p):
    a, b = as_complex(p["alpha"]), as_complex(p["beta"])
    return {"value": formulas.photon_added_witness(a, b), "exact": formulas.photon_added_witness_exact(a, b)}


def _formula_cat(p):
    res = formulas.cat_witness(as_complex(p["alpha"]), as_complex(p["beta"]))
    return {**res.values, **res.flags}


def _formula_number_pair(p):
    res = formulas.number_pair_values(int(p["k1"]), int(p["k2"]))
    return {**res.values, **res.flags}


def _formula_bs_vacuum(p):
    bs = _bs(p)
    return _moment_row(formulas.bs_output_moments_vacuum(_a_table(p), bs.t, bs.r))


def _formula_bs_m2(p):
    bs = _bs(p)
    res = formulas.bs_m2_moments(_a_table(p), bs.t, bs.r)
    return {**res.values, **res.flags}


def _formula_bs_leading(p):
    bs = _bs(p)
    table = _a_table(p)
    beta = as_complex(p["beta"]) if "beta" in p else None
    if beta is None:
        mag = float(p.get("beta_abs", 8.0))
        beta = mag * complex(math.cos(formulas.optimal_beta_phase(bs.t, bs.r, table)),
                             math.sin(formulas.optimal_beta_phase(bs.t, bs.r, table)))
    return {"beta": beta, "leading": formulas.bs_coherent_leading(beta, bs.t, bs.r, table)}


def _formula_duan_bs(p):
    bs = _bs(p)
    xi = float(p["xi"]) if "xi" in p else None
    res = formulas.duan_bs_chain(_a_table(p), bs.t, bs.r, xi)
    return {**res.values, **res.flags}


def _formula_paramp_m1(p):
    res = formulas.paramp_m1_condition(_sq_params(p))
    return {**res.values, **res.flags}


def _formula_paramp_m2(p):
    res = formulas.paramp_m2_condition(float(p["n_a"]), _sq_params(p))
    return {**res.values, **res.flags}


def _formula_duan_parametric(p):
    if "eta" in p:
        eta = float(p["eta"])
    else:
        eta = formulas.eta_from_table(_a_table(p))
    res = formulas.duan_parametric(eta, _sq_params(p))
    return {"eta": eta, **res.values, **res.flags}


def _formula_amplifier(p):
    params = _amp_params(p)
    if "state" not in p:
        raise ConfigError("amplifier formula needs 'state', a two-mode state spec")
    m0 = MomentSet.from_state(build_state(p["state"]))
    loss, high = formulas.amp_witness_forms(m0, params)
    out = {"exact": formulas.amp_exact_witness(m0, params), "loss_scaled": loss}
    if high is not None:
        out.update(high_gain=high.values["value"], bracket=high.values["bracket"])
    return out


def _formula_threshold(p):
    ta, tb = devices.classicality_threshold(_amp_params({"t": 0, **p}))
    return {"t_a": ta, "t_b": tb}


def _formula_w_coherent(p):
    return {"ab_dag": formulas.w_coherent_ab_dag(as_complex(p["alpha"]))}


FORMULAS: dict[str, Callable[[dict], dict]] = {
    "photon_added": _formula_photon_added,
    "cat": _formula_cat,
    "number_pair": _formula_number_pair,
    "bs_vacuum": _formula_bs_vacuum,
    "bs_m2": _formula_bs_m2,
    "bs_leading": _formula_bs_leading,
    "duan_bs_chain": _formula_duan_bs,
    "paramp_m1": _formula_paramp_m1,
    "paramp_m2": _formula_paramp_m2,
    "duan_parametric": _formula_duan_parametric,
    "amplifier": _formula_amplifier,
    "classicality_threshold": _formula_threshold,
    "w_coherent": _formula_w_coherent,
}


def run_formula(formula_id: str, params: dict) -> list[dict]:
    if formula_id not in FORMULAS:
        raise ConfigError(f"unknown formula {formula_id!r}; choose from {sorted(FORMULAS)}")
    try:
        values = FORMULAS[formula_id](params)
    except KeyError as exc:
        raise ConfigError(f"formula {formula_id!r} is missing parameter {exc}") from None
    return [{"formula": formula_id, **values}]


# -- entry point ------------------------------------------------------------------


def _parse_cutoffs(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(c) for c in text.split(","))
    except ValueError:
        raise ConfigError(f"--cutoff expects integers separated by commas, got {text!r}") from None


def _emit(rows: list[dict], fmt: str, out: str | None, default_name: str) -> None:
    text = render(rows, fmt)
    if out is None and os.environ.get(ENV_OUT_DIR):
        out = str(Path(os.environ[ENV_OUT_DIR]) / f"{default_name}.{fmt}")
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fockwitness", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="YAML or JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout, or $%s/<command>.<format>)" % ENV_OUT_DIR)
        p.add_argument("--format", choices=FORMATS, help="output format (default from config, else csv)")
        p.add_argument("--cutoff", help="per-mode cutoffs, e.g. 12 or 12,8")
        p.add_argument("--tolerance", type=float, help="witness margin tolerance")

    for name, text in (("witness", "evaluate witnesses on the configured state"),
                       ("scan", "evaluate witnesses over a parameter grid"),
                       ("evolve", "report output moments after the device pipeline")):
        common(sub.add_parser(name, help=text))
    fp = sub.add_parser("formula", help="evaluate a closed-form expression")
    fp.add_argument("formula_id", choices=sorted(FORMULAS))
    fp.add_argument("--params", default="{}", help='YAML mapping, e.g. "{k1: 3, k2: 0}"')
    common(fp, config_required=False)
    rp = sub.add_parser("reproduce", help="run the curated checks for one topic group")
    rp.add_argument("section", choices=("II", "III", "IV", "V"))
    rp.add_argument("--out", help="output directory (default: $%s or ./reproduce_out)" % ENV_OUT_DIR)
    rp.add_argument("--format", choices=FORMATS, default="csv")
    return parser


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    cut = _parse_cutoffs(args.cutoff)
    if cut is not None:
        cfg.cutoffs = cut
    if args.tolerance is not None:
        cfg.tolerance = args.tolerance
    if args.format:
        cfg.output_format = args.format
    if args.out:
        cfg.output_path = args.out
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce":
            from .reproduce import run_section

            out_dir = args.out or os.environ.get(ENV_OUT_DIR) or "reproduce_out"
            ok = run_section(args.section, Path(out_dir), args.format)
            return 0 if ok else 1
        if args.command == "formula":
            params = yaml.safe_load(args.params) if args.params else {}
            if args.config:
                params = {**(yaml.safe_load(Path(args.config).read_text()) or {}), **(params or {})}
            if not isinstance(params, dict):
                raise ConfigError("--params must be a mapping")
            rows = run_formula(args.formula_id, params)
            _emit(rows, args.format or "json", args.out, "formula")
            return 0
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "witness":
            rows = run_witness(cfg)
        elif args.command == "evolve":
            rows = run_scan(cfg, run_evolve) if cfg.scan else run_evolve(cfg)
        else:
            rows = run_scan(cfg)
        _emit(rows, cfg.output_format, cfg.output_path, args.command)
        return 0
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except KeyError as exc:
        print(f"config error: missing key {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError, TypeError, yaml.YAMLError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
