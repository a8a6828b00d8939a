"""Command-line front end.

Every subcommand takes the shared run settings (``--seed``, ``--out``,
``--config`` and the numeric knobs below). Values come from flags first, then
from the ``key=value`` config file, then from the built-in defaults. Exit
codes: 0 success, 1 usage/config error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import rng as rngmod
from . import transforms as T
from .conditioning import TpsWarpParams, XdogParams, make_reference, xdog_sketch
from .csvio import write_csv
from .errors import ConfigError, SigmaSpaceError
from .fit import corruption_curve, select_phi
from .imaging import ImageBuffer, from_diffusion, load_png, make_grid, save_png, synth_corpus, to_diffusion
from .metrics import ChannelPolicy, SsimParams, ssim
from .sampler import GaussianOracleDenoiser, TraceOptions, euler_rollout, heun_rollout, initial_noise
from .schedule import ddpm_cosine_equivalent_sigmas, edm_rho_schedule, phi_schedule, schedule_rows


@dataclass(frozen=True)
class RunConfig:
    sigma_min: float = 0.002
    sigma_max: float = 80.0
    n_levels: int = 50
    rho: float = 7.0
    sigma_data: float = 0.5
    transform: str = "squash:0.3"
    corpus: str = "synth:1:16:64"
    seed: int = 0
    draws: int = 2
    channel_policy: str = "per-channel-mean"
    out: str = "out"

    def __post_init__(self):
        if not (0 < self.sigma_min < self.sigma_max) or not math.isfinite(self.sigma_max):
            raise ConfigError(f"need 0 < sigma_min < sigma_max, got {self.sigma_min}, {self.sigma_max}")
        if self.n_levels < 2:
            raise ConfigError("n_levels must be >= 2")
        if not self.rho >= 1:
            raise ConfigError("rho must be >= 1")
        if not self.sigma_data > 0:
            raise ConfigError("sigma_data must be positive")
        if self.draws < 1:
            raise ConfigError("draws must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        try:
            T.parse_spec(self.transform)
            ChannelPolicy(self.channel_policy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        _parse_corpus_source(self.corpus)

    @property
    def spec(self) -> T.TransformSpec:
        return T.parse_spec(self.transform)

    @property
    def ssim_params(self) -> SsimParams:
        return SsimParams(channel_policy=ChannelPolicy(self.channel_policy))

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={repr(v) if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls(**_coerce(_parse_kv(text)))


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"config line {lineno}: expected key=value")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def _coerce(values: dict) -> dict:
    out = {}
    for key, value in values.items():
        kind = _FIELD_TYPES[key]
        try:
            if kind == "float":
                out[key] = float(value)
            elif kind == "int":
                out[key] = int(value)
            else:
                out[key] = str(value)
        except ValueError:
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return out


def _parse_corpus_source(text: str):
    if text.startswith("synth:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError("synthetic corpus must look like synth:SEED:COUNT:SIZE")
        try:
            seed, count, size = (int(p) for p in parts[1:])
        except ValueError:
            raise ConfigError(f"bad synthetic corpus spec {text!r}") from None
        if count < 1 or size < 16:
            raise ConfigError("synthetic corpus needs count >= 1 and size >= 16")
        return ("synth", seed, count, size)
    return ("dir", Path(text))


def load_corpus(source: str) -> list[ImageBuffer]:
    parsed = _parse_corpus_source(source)
    if parsed[0] == "synth":
        return synth_corpus(*parsed[1:])
    folder = parsed[1]
    if not folder.is_dir():
        raise ConfigError(f"corpus directory {folder} does not exist")
    paths = sorted(folder.glob("*.png"))
    if not paths:
        raise ConfigError(f"no PNG files in {folder}")
    return [load_png(p) for p in paths]


# --------------------------------------------------------------------- commands

def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_image(cfg: RunConfig, path) -> ImageBuffer:
    return load_png(path) if path else load_corpus(cfg.corpus)[0]


def _file_tag(spec) -> str:
    return str(spec).replace(":", "-")


def cmd_select_phi(cfg: RunConfig, args) -> int:
    corpus = load_corpus(cfg.corpus)
    cands = [T.parse_spec(s) for s in args.candidates.split(",")] if args.candidates else T.candidate_set()
    ranking, profiles = select_phi(corpus, cands, cfg.n_levels, cfg.sigma_min, cfg.sigma_max,
                                   cfg.draws, cfg.seed, cfg.ssim_params, return_profiles=True)
    out = _out_dir(cfg)
    write_csv(out / "ranking.csv", ["rank", "spec", "r2"],
              [(k + 1, str(s), r2) for k, (s, r2) in enumerate(ranking)])
    for prof in profiles:
        write_csv(out / f"profile_{_file_tag(prof.spec)}.csv", ["sigma", "phi", "mean_ssim"], prof.points)
    print(f"{'rank':>4}  {'transform':<16} {'label':<18} {'R^2':>8}")
    for k, (s, r2) in enumerate(ranking, 1):
        print(f"{k:>4}  {str(s):<16} {s.label:<18} {r2:8.4f}")
    return 0


def _build_schedule(cfg: RunConfig, kind: str, n: int):
    if kind == "phi":
        return phi_schedule(cfg.spec, cfg.sigma_min, cfg.sigma_max, n)
    if kind == "edm":
        return edm_rho_schedule(cfg.rho, cfg.sigma_min, cfg.sigma_max, n)
    if kind == "ddpm":
        return ddpm_cosine_equivalent_sigmas(n)
    raise ConfigError(f"unknown schedule kind {kind!r}")


def cmd_schedule(cfg: RunConfig, args) -> int:
    sched = _build_schedule(cfg, args.kind, cfg.n_levels)
    out = _out_dir(cfg)
    write_csv(out / "schedule.csv", ["i", "sigma", "phi"], schedule_rows(sched, cfg.spec))
    print(f"wrote {len(sched)} levels ({args.kind}) to {out / 'schedule.csv'}")
    return 0


def cmd_corrupt_grid(cfg: RunConfig, args) -> int:
    image = _input_image(cfg, args.input)
    levels, scores, noisy = corruption_curve(image, args.kind, args.steps, rngmod.fork(cfg.seed, "corrupt-grid"),
                                             cfg.spec, cfg.rho, cfg.sigma_min, cfg.sigma_max, cfg.ssim_params)
    cells = args.rows * args.cols
    pick = np.unique(np.round(np.linspace(0, len(noisy) - 1, min(cells, len(noisy)))).astype(int))
    out = _out_dir(cfg)
    save_png(make_grid([noisy[k] for k in pick], args.rows, args.cols), out / f"grid_{args.kind}.png")
    write_csv(out / f"curve_{args.kind}.csv", ["step", "sigma", "ssim"],
              [(t, float(s), float(q)) for t, (s, q) in enumerate(zip(levels, scores))])
    print(f"{args.kind}: SSIM {scores[0]:.4f} -> {scores[-1]:.4f} over {len(scores)} steps")
    return 0


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def cmd_sample_oracle(cfg: RunConfig, args) -> int:
    mean, var = _floats(args.mean), _floats(args.var)
    if mean.shape != var.shape:
        raise ConfigError("--mean and --var must have the same length")
    if np.any(var <= 0):
        raise ConfigError("oracle variances must be positive")
    oracle = GaussianOracleDenoiser(mean, var)
    sched = phi_schedule(cfg.spec, cfg.sigma_min, cfg.sigma_max, cfg.n_levels).descending()
    init = initial_noise((args.samples, mean.size), cfg.sigma_max, rngmod.stream(cfg.seed, "sample-oracle"),
                         unit_variance=args.init == "unit")
    rollout = heun_rollout if args.integrator == "heun" else euler_rollout
    x, trace = rollout(oracle, None, sched, init, TraceOptions(snapshots=True))
    out = _out_dir(cfg)
    write_csv(out / "samples.csv", ["sample"] + [f"x{k}" for k in range(mean.size)],
              [(n, *row) for n, row in enumerate(x.tolist())])
    write_csv(out / "trace.csv", ["i", "sigma", "phi", "ssim"],
              [(r.i, r.sigma, T.apply(cfg.spec, r.sigma), math.nan) for r in trace])
    print("sample mean:", " ".join(f"{v:.5f}" for v in x.mean(axis=0)))
    print("sample var: ", " ".join(f"{v:.5f}" for v in x.var(axis=0)))
    return 0


def cmd_sketch(cfg: RunConfig, args) -> int:
    image = _input_image(cfg, args.input)
    params = XdogParams(args.xdog_sigma, args.xdog_k, args.xdog_tau, args.xdog_epsilon, args.xdog_phi)
    out = _out_dir(cfg)
    save_png(xdog_sketch(image, params), out / "sketch.png")
    return 0


def cmd_warp(cfg: RunConfig, args) -> int:
    image = _input_image(cfg, args.input)
    params = TpsWarpParams(args.grid, args.jitter, args.rotation)
    out = _out_dir(cfg)
    save_png(make_reference(image, params, rngmod.stream(cfg.seed, "warp")), out / "warped.png")
    return 0


def cmd_curves(cfg: RunConfig, args) -> int:
    """Forward corruption and oracle-driven reverse SSIM, both against phi(sigma)."""
    image = _input_image(cfg, args.input)
    spec = cfg.spec
    sched = phi_schedule(spec, cfg.sigma_min, cfg.sigma_max, cfg.n_levels)
    x0 = to_diffusion(image).data
    p = cfg.ssim_params
    fwd = []
    for i, s in enumerate(sched.sigmas.tolist()):
        noisy = x0 + s * rngmod.stream(cfg.seed, "curves-forward", i).standard_normal(x0.shape)
        fwd.append(ssim(image, from_diffusion(noisy), p))
    oracle = GaussianOracleDenoiser(x0, np.full(x0.shape, args.oracle_var))
    init = initial_noise(x0.shape, cfg.sigma_max, rngmod.stream(cfg.seed, "curves-reverse"))
    _, trace = euler_rollout(oracle, None, sched.descending(), init, TraceOptions(reference=image, ssim_params=p))
    rev = {r.i: r.ssim for r in trace}
    rows = [(i, s, T.apply(spec, s), fwd[i], rev[i]) for i, s in enumerate(sched.sigmas.tolist())]
    out = _out_dir(cfg)
    write_csv(out / "curves.csv", ["i", "sigma", "phi", "forward_ssim", "reverse_ssim"], rows)
    return 0


# ----------------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("run settings")
    g.add_argument("--config", help="key=value file; flags override it")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        typ = {"float": float, "int": int}.get(f.type, str)
        g.add_argument(flag, dest=f.name, type=typ, default=None,
                       help=f"default: {f.default}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sigmaspace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("select-phi", help="rank transforms by SSIM linearity")
    _common(p)
    p.add_argument("--candidates", help="comma-separated transform list (default: all sixteen)")
    p.set_defaults(func=cmd_select_phi)

    p = sub.add_parser("schedule", help="export a noise schedule")
    _common(p)
    p.add_argument("--kind", choices=("phi", "edm", "ddpm"), default="phi")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("corrupt-grid", help="corruption grid PNG and SSIM-per-step CSV")
    _common(p)
    p.add_argument("--input", help="PNG to corrupt (default: first corpus image)")
    p.add_argument("--kind", choices=("phi", "edm", "ddpm"), default="phi")
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--rows", type=int, default=5)
    p.add_argument("--cols", type=int, default=5)
    p.set_defaults(func=cmd_corrupt_grid)

    p = sub.add_parser("sample-oracle", help="sample a Gaussian oracle with the ODE solvers")
    _common(p)
    p.add_argument("--mean", default="0.2,-0.1")
    p.add_argument("--var", default="0.04,0.09")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--integrator", choices=("heun", "euler"), default="heun")
    p.add_argument("--init", choices=("scaled", "unit"), default="scaled",
                   help="scaled: sigma_max * eps; unit: eps")
    p.set_defaults(func=cmd_sample_oracle)

    p = sub.add_parser("sketch", help="XDoG line sketch")
    _common(p)
    p.add_argument("--input")
    d = XdogParams()
    p.add_argument("--xdog-sigma", type=float, default=d.sigma_small)
    p.add_argument("--xdog-k", type=float, default=d.k)
    p.add_argument("--xdog-tau", type=float, default=d.tau)
    p.add_argument("--xdog-epsilon", type=float, default=d.epsilon)
    p.add_argument("--xdog-phi", type=float, default=d.phi_sharpness)
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("warp", help="TPS warp plus random rotation")
    _common(p)
    p.add_argument("--input")
    w = TpsWarpParams()
    p.add_argument("--grid", type=int, default=w.grid)
    p.add_argument("--jitter", type=float, default=w.jitter_std)
    p.add_argument("--rotation", type=float, default=w.rotation_range)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("curves", help="forward and reverse SSIM against phi(sigma)")
    _common(p)
    p.add_argument("--input")
    p.add_argument("--oracle-var", type=float, default=1e-3,
                   help="per-pixel variance of the oracle fitted to the input image")
    p.set_defaults(func=cmd_curves)
    return parser


def resolve_config(args) -> RunConfig:
    values = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        values.update(_coerce(_parse_kv(text)))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return RunConfig(**values)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"sigmaspace: config error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"sigmaspace: config error: {exc}", file=sys.stderr)
        return 1
    except (SigmaSpaceError, OSError, ValueError) as exc:
        print(f"sigmaspace: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
