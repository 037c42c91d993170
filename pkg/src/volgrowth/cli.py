"""``volgrowth`` command line: normalize, build, assemble, simulate, certify, plot.

Each stage runs every stage before it and writes its artifacts to ``--out``.
Exit codes: 0 success, 2 normalization failure, 3 verification or
certificate failure, 4 I/O or schema error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import io as vio
from .assembly import (
    AssemblyError,
    assemble,
    choose_levels,
    discrete_growth_table,
    level_restricted,
    validate_model,
)
from .growth import DEFAULT_A_MAX, DEFAULT_LAMBDA, GrowthError, check_bgd, normalize
from .pieces import MODES, TORUS
from .simulate import CertificateFailed, ball_volume_table, growth_certificate, to_metric_graph, verify_sandwich
from .tree import InfeasibleLevel, LevelSet, build_tree

log = logging.getLogger("volgrowth")

EXIT_OK, EXIT_NORMALIZE, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4
NA = "NA"


def data_path(name: str) -> Path:
    return Path(str(resources.files("volgrowth") / "data" / name))


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; there is no randomness, so this fixes the outputs."""

    input: str | None = None
    catalog: str | None = None
    horizon: int | None = None
    lam: str = str(DEFAULT_LAMBDA)
    a_max: int = DEFAULT_A_MAX
    resolution: int = 1
    mode: str = "connected-sum"
    schedule_mode: str = "auto"
    schedule: tuple | None = None
    out: str = "volgrowth-out"
    deterministic: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        if d["schedule"] is not None:
            d["schedule"] = [list(x) for x in d["schedule"]]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        if d.get("schedule") is not None:
            d["schedule"] = tuple(tuple(int(x) for x in pair) for pair in d["schedule"])
        if d.get("lam") is not None:
            d["lam"] = str(Fraction(str(d["lam"])))
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.schedule_mode not in ("auto", "explicit"):
            raise ValueError("schedule_mode must be auto or explicit")
        if self.schedule_mode == "explicit" and self.schedule is None:
            raise ValueError("explicit schedule mode needs a schedule")
        if self.resolution < 1 or self.a_max < 1:
            raise ValueError("resolution and a_max must be positive")
        if self.horizon is not None and self.horizon < 3:
            raise ValueError("horizon must be >= 3")
        if not self.deterministic:
            raise ValueError("runs are always deterministic")

    @property
    def lam_value(self) -> Fraction:
        return Fraction(self.lam)

    def resolved(self, base: Path | None = None) -> "RunConfig":
        """Absolute paths; missing input/catalog fall back to the shipped defaults."""
        base = Path.cwd() if base is None else base

        def fix(p, default):
            if p is None:
                return str(data_path(default))
            p = Path(p)
            return str(p if p.is_absolute() else (base / p).resolve())

        return replace(
            self,
            input=fix(self.input, "linear.csv"),
            catalog=fix(self.catalog, "catalog.jsonl"),
            out=str(Path(self.out).resolve()),
        )


# ---------------------------------------------------------------- stages


class Run:
    """Lazily computed pipeline state for one config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "config.json").write_text(cfg.to_json())

    def normalize(self):
        v = vio.read_growth_csv(self.cfg.input)
        if self.cfg.horizon is not None:
            if self.cfg.horizon > v.horizon:
                raise vio.SchemaError(self.cfg.input, None, f"table has horizon {v.horizon} < {self.cfg.horizon}")
            v = v.truncate(self.cfg.horizon)
        self.raw = v
        cv = normalize(v, self.cfg.lam_value, self.cfg.a_max)
        self.v = cv
        vio.write_growth_csv(self.out / "canonical.csv", cv.values)
        vio.write_record(
            self.out / "witness.txt",
            cv.witness.to_record(
                lam=cv.lam, C=cv.scale_witness, bgd_input=check_bgd(v), bgd_canonical=cv.bgd_constant
            ),
        )
        print(f"normalized: N={cv.horizon} A={cv.witness.A} C={cv.scale_witness} lambda={cv.lam}")
        return cv

    def load_catalog(self):
        self.catalog = vio.load_catalog(self.cfg.catalog, self.cfg.mode)
        report = self.catalog.verify()
        (self.out / "catalog_report.txt").write_text("\n".join(report.lines()) + "\n")
        if not report.ok:
            for r in report.failures():
                print(f"catalog check failed: {r.line()}", file=sys.stderr)
            raise VerificationFailed(f"catalog fails items {sorted(report.failed_items())}")
        return self.catalog

    def build(self):
        v = self.normalize()
        cat = self.load_catalog()
        if self.cfg.schedule_mode == "explicit":
            S = LevelSet(self.cfg.schedule)
        else:
            S = choose_levels(v, cat.block_heights, cat.bounds, cat, a_max=self.cfg.a_max)
        self.S = S
        self.tree = build_tree(v, S)
        vio.write_levelset_csv(self.out / "levelset.csv", S)
        vio.write_tree_csv(self.out / "tree.csv", self.tree)
        print(f"tree: {len(self.tree)} vertices, S={list(S.intervals)}")
        return self.tree

    def assemble(self):
        self.build()
        m = assemble(self.v, self.S, self.tree, self.catalog)
        report = validate_model(m)
        (self.out / "model_report.txt").write_text("\n".join(report.lines()) + "\n")
        if not report.ok:
            for c in report.failures()[:10]:
                print(f"model check failed: {c.line()}", file=sys.stderr)
            raise VerificationFailed("model validation failed")
        self.model = m
        self.z = discrete_growth_table(m)
        vio.write_instances_csv(self.out / "instances.csv", m)
        vio.write_placements_csv(self.out / "placements.csv", m)
        vio.write_growth_csv(self.out / "z.csv", self.z, column="z")
        torus = [g for g in m.gluings if m.instances[g.parent].spec.components[g.parent_component].plus_kinds[g.port] == TORUS]
        if torus:
            log.info("torus interfaces glued: %d", len(torus))
            for g in torus[:5]:
                log.info(
                    "  torus: %s#%d strand %d -> %s#%d",
                    m.instances[g.parent].spec.label, g.parent, g.parent_strand, m.instances[g.child].spec.label, g.child,
                )
        print(f"model: {len(m.instances)} instances, total volume {m.total_volume()}")
        return m

    def simulate(self):
        m = self.assemble()
        g = to_metric_graph(m, self.cfg.resolution)
        w = ball_volume_table(g, m.length_horizon)
        self.graph, self.w = g, w
        vio.write_edges_csv(self.out / "edges.csv", g)
        vio.write_growth_csv(self.out / "w.csv", w.values, column="w", index="alpha")
        rep = verify_sandwich(m, g, w=w)
        self.sandwich = rep
        (self.out / "sandwich.txt").write_text("\n".join(rep.lines()) + "\n")
        print(f"graph: {len(g.vertices)} vertices, sandwich {'ok' if rep.ok else 'VIOLATED'}")
        return g

    def certify(self):
        self.simulate()
        try:
            cert = growth_certificate(self.v, self.model, self.graph, self.cfg.a_max, w=self.w)
        except CertificateFailed as exc:
            cert = exc.certificate
            self._write_certificate(cert)
            raise
        self._write_certificate(cert)
        if not cert.valid:
            raise VerificationFailed(f"certificate is {cert.status}")
        return cert

    def _write_certificate(self, cert):
        (self.out / "certificate.txt").write_text(cert.to_record())
        print(f"certificate: {cert.status}" + (f" at {cert.failed_component}" if cert.failed_component else ""))

    def plot(self):
        """Aligned ``n, n*l, v(n), z(n*l), w(n*l)``; a missing ``w`` stage gives ``NA``."""
        out = self.out
        if not (out / "canonical.csv").exists() or not (out / "z.csv").exists():
            self.assemble()
        v = vio.read_growth_csv(out / "canonical.csv").values
        z = [int(x) for _, (_, x) in vio.read_csv(out / "z.csv", ("n", "z"))]
        w = None
        if (out / "w.csv").exists():
            w = [Fraction(x) for _, (_, x) in vio.read_csv(out / "w.csv", ("alpha", "w"))]
        l = vio.load_catalog(self.cfg.catalog, self.cfg.mode).bounds.l
        N = len(v) - 1
        zl = level_restricted(z, l, N)
        rows = []
        for n in range(N + 1):
            wn = w[n * l] if w is not None and n * l < len(w) else NA
            rows.append((n, n * l, v[n], zl[n], wn))
        path = vio.write_csv(out / "plot.csv", ("n", "length=n*l", "v(n)", "z(n*l)", "w(n*l)"), rows)
        print(f"plot: {path} ({N + 1} rows{'' if w is not None else ', w absent'})")
        return path


class VerificationFailed(Exception):
    pass


# ---------------------------------------------------------------- argument handling

COMMANDS = ("normalize", "build", "assemble", "simulate", "certify", "plot")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="volgrowth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--input", help="growth table CSV with header n,v")
        s.add_argument("--catalog", help="piece catalog (JSONL)")
        s.add_argument("--horizon", type=int, help="truncate the table to n <= horizon")
        s.add_argument("--lambda", dest="lam", help="subexponential base, a rational in (1, 2)")
        s.add_argument("--a-max", type=int, help="largest equivalence witness A searched")
        s.add_argument("--resolution", type=int, help="edges per unit length in the metric graph")
        s.add_argument("--mode", choices=MODES)
        s.add_argument("--schedule", help="explicit blocks as n:t,n:t,... (default: automatic)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--config", help="JSON config; its keys override the flags")
        s.add_argument("-q", "--quiet", action="store_true")
    return p


def parse_schedule(text: str) -> tuple:
    pairs = []
    for item in text.split(","):
        n, _, t = item.partition(":")
        pairs.append((int(n), int(t or 1)))
    return tuple(pairs)


def config_from_args(args) -> RunConfig:
    base = RunConfig()
    flags = {
        k: getattr(args, k)
        for k in ("input", "catalog", "horizon", "lam", "a_max", "resolution", "mode", "out")
        if getattr(args, k) is not None
    }
    if args.schedule:
        flags["schedule"] = parse_schedule(args.schedule)
        flags["schedule_mode"] = "explicit"
    cfg = replace(base, **flags)
    if args.lam is not None:
        cfg = replace(cfg, lam=str(Fraction(args.lam)))
    cfg = cfg.resolved()
    if args.config:
        path = Path(args.config)
        data = json.loads(path.read_text())
        merged = cfg.to_dict()
        merged.update(data)
        # paths in a config file are relative to the file; "out" stays relative to the working directory
        for key in ("input", "catalog"):
            if key in data and data[key] is not None and not Path(data[key]).is_absolute():
                merged[key] = str((path.parent / data[key]).resolve())
        cfg = RunConfig.from_dict(merged).resolved()
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        run = Run(cfg)
        getattr(run, args.command)()
    except GrowthError as exc:
        print(f"normalization failed: {exc}", file=sys.stderr)
        for k, v in getattr(exc, "budget", {}).items():
            print(f"  budget {k}={v}", file=sys.stderr)
        return EXIT_NORMALIZE
    except CertificateFailed as exc:
        print(f"certificate failed at {exc.component}", file=sys.stderr)
        return EXIT_VERIFY
    except (VerificationFailed, AssemblyError, InfeasibleLevel) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (vio.SchemaError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
