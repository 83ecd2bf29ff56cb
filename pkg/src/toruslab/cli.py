"""Command line driver: subcommands, configuration, result cache, manifests.

Every subcommand turns (parameters, seed) into a set of named artifacts
(bytes).  Artifacts go to out_dir/<command>/<key>/ together with a manifest
listing their sha256; the key is a hash of the canonical parameters, so a
re-run with the same inputs rewrites identical bytes.  Computed payloads are
cached as JSON under out_dir/cache.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import InputError, ToruslabError

log = logging.getLogger("toruslab")

VERSION = "0.1.0"

DEFAULTS = {
    "run": {"out_dir": "toruslab_out", "seed": "0", "workers": "1", "cache": "yes"},
    "equidist": {"family": "quadratic", "kmin": "25", "kmax": "250000", "count": "12",
                 "scheme": "grid", "step": "0.05", "samples": "4096"},
    "hecke": {"sigma": "1.0", "tol": "1e-10", "max_nodes": "512"},
    "zeta": {"B": "1000000"},
    "caps": {"ideal_cap": "200000", "picard_cap": "5000", "window_cap": "100000",
             "unit_radius": "4000"},
}


# ----------------------------------------------------------------------------
# configuration


def load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.read_dict(DEFAULTS)
    if path:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"config file {path} not found")
        try:
            extra = configparser.ConfigParser()
            extra.read(p)
        except configparser.Error as exc:
            raise InputError(f"cannot parse config: {exc}") from exc
        for sec in extra.sections():
            if sec not in DEFAULTS:
                raise InputError(f"unknown config section [{sec}]")
            for key, val in extra[sec].items():
                if key not in {k.lower() for k in DEFAULTS[sec]}:
                    raise InputError(f"unknown config key {sec}.{key}")
                cfg[sec][key] = val
    return cfg


def _get(cfg, sec, key, conv=str):
    try:
        return conv(cfg[sec][key])
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad config value {sec}.{key}") from exc


def _pick(flag, cfg, sec, key, conv=str):
    return conv(flag) if flag is not None else _get(cfg, sec, key, conv)


# ----------------------------------------------------------------------------
# hashing, cache, artifacts


def canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def stable_key(command: str, params: dict) -> str:
    return hashlib.sha256(canonical({"command": command, "params": params, "version": VERSION})).hexdigest()


class Cache:
    def __init__(self, root: Path, enabled: bool = True):
        self.root = root / "cache"
        self.enabled = enabled

    def get(self, key: str):
        if not self.enabled:
            return None
        path = self.root / f"{key}.json"
        if not path.is_file():
            return None
        try:
            blob = json.loads(path.read_text())
            body = canonical(blob["result"])
            if blob.get("key") != key or blob.get("sha256") != hashlib.sha256(body).hexdigest():
                raise ValueError("hash mismatch")
        except (ValueError, KeyError) as exc:
            log.warning("corrupt cache entry %s (%s); recomputing", key[:12], exc)
            return None
        log.info("cache hit %s", key[:12])
        return blob["result"]

    def put(self, key: str, result):
        if not self.enabled:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        body = canonical(result)
        blob = {"key": key, "sha256": hashlib.sha256(body).hexdigest(), "result": result}
        (self.root / f"{key}.json").write_text(json.dumps(blob, sort_keys=True) + "\n")


def write_artifacts(out_dir: Path, command: str, params: dict, key: str, artifacts: dict) -> Path:
    dest = out_dir / command / key[:16]
    dest.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in sorted(artifacts):
        data = artifacts[name]
        if isinstance(data, str):
            data = data.encode()
        (dest / name).write_bytes(data)
        files[name] = hashlib.sha256(data).hexdigest()
    manifest = {"command": command, "params": params, "key": key, "version": VERSION, "artifacts": files}
    (dest / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return dest


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _pmap(fn, items, workers: int):
    """Ordered map; results are merged in input order whatever the worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _poly(text):
    from . import order_core as oc

    return oc.MonicIntPoly.parse(text)


# ----------------------------------------------------------------------------
# subcommands: each returns (params, compute) where compute() -> JSON payload,
# and render(payload) -> artifacts


def cmd_disc(a, cfg):
    params = {"poly": str(_poly(a.poly))}

    def compute():
        from . import order_core as oc

        P = _poly(a.poly)
        OK = oc.maximal_order(P)
        return {"poly": str(P), "poly_disc": P.disc, "signature": list(P.signature),
                "maximal_order_disc": OK.disc, "index": OK.index}

    return params, compute, lambda r: {"disc.json": _json(r)}


def cmd_classes(a, cfg):
    params = {"poly": str(_poly(a.poly)), "ideal_cap": _get(cfg, "caps", "ideal_cap", int)}

    def compute():
        from . import correspondence as co

        P = _poly(a.poly)
        packets = co.enumerate_coarse_classes(P, cap=params["ideal_cap"])
        return {"csv": co.packets_csv(P, packets)}

    return params, compute, lambda r: {"packets.csv": r["csv"]}


def cmd_packets(a, cfg):
    params = {"poly": str(_poly(a.poly)), "ideal_cap": _get(cfg, "caps", "ideal_cap", int),
              "unit_radius": _get(cfg, "caps", "unit_radius", float)}

    def compute():
        from . import correspondence as co
        from . import order_core as oc

        P = _poly(a.poly)
        rows = []
        for i, pk in enumerate(co.enumerate_coarse_classes(P, cap=params["ideal_cap"])):
            units = oc.unit_group(pk.order, max_radius=params["unit_radius"])
            rows.append([i, pk.order.disc, pk.order.index, pk.size, repr(units.regulator),
                         repr(units.regulator * pk.size), int(oc.is_invertible(pk.classes[0].representative,
                                                                                pk.order))])
        return {"rows": rows}

    def render(r):
        head = ["packet_id", "order_disc", "index", "classes", "regulator", "volume", "invertible"]
        return {"packets.csv": _csv(head, r["rows"])}

    return params, compute, render


def _weyl_row(job):
    from . import equidist as eq

    poly, scheme, step, samples, seed = job
    pk = eq.invertible_packet(_poly(poly))
    suite = eq.default_suite(pk.order.poly.n)
    row = eq.weyl_average(pk, suite, scheme=scheme, step=step, m=samples, seed=seed)
    return {"poly": poly, "disc": row.disc, "volume": row.volume, "means": row.means.tolist(),
            "rhs": row.rhs.tolist(), "stderr": row.stderr.tolist(), "samples": row.samples,
            "classes": row.classes}


def cmd_equidist(a, cfg):
    from . import equidist as eq

    family = _pick(a.family, cfg, "equidist", "family")
    kmin = _pick(a.kmin, cfg, "equidist", "kmin", int)
    kmax = _pick(a.kmax, cfg, "equidist", "kmax", int)
    count = _pick(a.count, cfg, "equidist", "count", int)
    scheme = _pick(a.scheme, cfg, "equidist", "scheme")
    step = _pick(a.step, cfg, "equidist", "step", float)
    samples = _pick(a.samples, cfg, "equidist", "samples", int)
    seed = _pick(a.seed, cfg, "run", "seed", int)
    if scheme not in ("grid", "monte_carlo"):
        raise InputError(f"unknown scheme {scheme!r}")
    polys = [str(P) for P in eq.family_polys(family, kmin, kmax, count)]
    params = {"family": family, "polys": polys, "scheme": scheme, "step": step,
              "samples": samples if scheme == "monte_carlo" else 0, "seed": seed}
    workers = _pick(a.workers, cfg, "run", "workers", int)

    def compute():
        jobs = [(p, scheme, step, samples, seed) for p in polys]
        return {"rows": _pmap(_weyl_row, jobs, workers)}

    def render(r):
        import numpy as np

        suite = eq.default_suite(2 if family == "quadratic" else 3)
        rows = [eq.WeylRow(x["disc"], x["volume"], np.array(x["means"]), np.array(x["rhs"]),
                           np.array(x["stderr"]), x["samples"], x["classes"]) for x in r["rows"]]
        first, last = eq.decile_drop(rows)
        summary = {"family": family, "suite": [f.describe() for f in suite],
                   "first_decile_mean": first, "last_decile_mean": last,
                   "drop": 1 - last / first if first else 0.0, "seed": seed}
        return {"weyl.csv": eq.weyl_csv(rows, suite), "summary.json": _json(summary)}

    return params, compute, render


def cmd_hecke(a, cfg):
    sigma = _pick(a.sigma, cfg, "hecke", "sigma", float)
    tol = _get(cfg, "hecke", "tol", float)
    params = {"poly": str(_poly(a.poly)), "sigma": sigma, "tol": tol, "class": a.class_index}

    def compute():
        from . import equidist as eq

        pk = eq.invertible_packet(_poly(a.poly))
        idx = range(pk.size) if a.class_index is None else [a.class_index]
        out = []
        for i in idx:
            if not 0 <= i < pk.size:
                raise InputError(f"class index {i} out of range (h = {pk.size})")
            res = eq.hecke_unfolding_check(pk.classes[i], sigma=sigma, tol=tol,
                                           max_nodes=_get(cfg, "hecke", "max_nodes", int))
            out.append({"class": i, "lhs": res.lhs, "rhs": res.rhs, "relerr": res.relerr,
                        "nodes": res.nodes, "terms": res.terms, "tail_change": res.tail_change})
        return {"poly": params["poly"], "sigma": sigma, "classes": out}

    return params, compute, lambda r: {"hecke.json": _json(r)}


def cmd_building(a, cfg):
    from . import local_building as lb

    P = _poly(a.poly)
    params = {"prime": a.prime, "poly": str(P), "conjugate": a.conjugate or "1"}

    def compute():
        C = lb.companion_matrix(P.coeffs)
        if a.conjugate:
            g = lb.parse_matrix(a.conjugate)
            if len(g) != P.n:
                raise InputError("conjugating matrix has the wrong size")
            data = lb.LocalTorusData.conjugated(a.prime, C, g)
        else:
            data = lb.LocalTorusData(a.prime, C)
        dD = lb.disc_D(data)
        dA = lb.algebra_disc(data)
        norm = lb.canonical_norm(data)
        dens = lb.unit_density(data)
        row = {"prime": a.prime, "poly": str(P), "conjugate": params["conjugate"], "disc_D": dD,
               "disc_A": dA, "factors": ";".join(f"e{e}f{f}" for e, f in norm.factors),
               "unit_density": str(dens), "unit_density_bound": repr(lb.unit_density_bound(data)),
               "dual_volume_ratio": lb.dual_volume_ratio(data), "delta": "", "delta_bound": ""}
        if norm.split:
            d, _ = lb.delta_distance(data)
            row["delta"] = str(d)
            row["delta_bound"] = str(lb.delta_lower_bound(data))
        return row

    def render(r):
        head = ["prime", "poly", "conjugate", "disc_D", "disc_A", "factors", "unit_density",
                "unit_density_bound", "dual_volume_ratio", "delta", "delta_bound"]
        return {"building.csv": _csv(head, [[r[k] for k in head]])}

    return params, compute, render


def cmd_zeta(a, cfg):
    B = _pick(a.B, cfg, "zeta", "B", int)
    seed = _pick(a.seed, cfg, "run", "seed", int)
    if a.trend:
        params = {"trend": a.trend, "seed": seed}
    elif a.charsum:
        params = {"charsum": a.charsum, "kmin": a.kmin, "kmax": a.kmax, "count": a.count,
                  "picard_cap": _get(cfg, "caps", "picard_cap", int)}
    else:
        if not a.poly:
            raise InputError("zeta needs --poly, --trend or --charsum")
        params = {"poly": str(_poly(a.poly)), "B": B}

    def compute():
        from . import order_core as oc
        from . import zeta_lfn as z

        if a.trend:
            fam = z.quadratic_family() if a.trend == "quadratic" else z.cubic_family()
            rows = [z.packet_volume(O) for O in fam]
            fit = z.volume_disc_trend(rows, seed=seed)
            return {"csv": z.trend_csv(rows), "fit": fit.__dict__}
        if a.charsum:
            from . import equidist as eq

            rows = []
            for P in eq.family_polys(a.charsum, a.kmin, a.kmax, a.count):
                O = oc.order_from_poly(P)
                pic = oc.picard_group(O, cap=params["picard_cap"])
                if pic.order_size < 2:
                    continue
                # the first nontrivial character
                val = eq.class_character_sum(O, 1, delta=1.0)
                rows.append([str(P), abs(O.disc), pic.order_size, repr(abs(val))])
            return {"rows": rows}
        O = oc.maximal_order(_poly(a.poly))
        return z.cnf_check(O, B).to_json()

    def render(r):
        if a.trend:
            return {"trend.csv": r["csv"], "fit.json": _json(r["fit"])}
        if a.charsum:
            return {"charsum.csv": _csv(["poly", "disc", "h", "abs_character_sum"], r["rows"])}
        return {"cnf.json": _json(r)}

    return params, compute, render


def cmd_cube_roots(a, cfg):
    cap = _get(cfg, "caps", "window_cap", int)
    params = {"poly": str(_poly(a.poly)), "bound": a.bound, "cap": cap}

    def compute():
        from . import correspondence as co

        P = _poly(a.poly)
        W = co.Window.box(P.n, a.bound)
        pts, lengths, counts = co.integral_points_in_window(P, W, cap=cap)
        pts2, _, _ = co.integral_points_in_window(P, W.scaled(2), cap=cap)
        return {"points": [[list(r) for r in m.M] for m in pts], "lengths": lengths, "counts": counts,
                "count": len(pts), "count_2w": len(pts2)}

    def render(r):
        rows = [[json.dumps(m, separators=(",", ":"))] for m in r["points"]]
        summ = {k: r[k] for k in ("lengths", "counts", "count", "count_2w")}
        summ["ratio_2w"] = r["count_2w"] / r["count"] if r["count"] else None
        return {"points.csv": _csv(["matrix"], rows), "summary.json": _json(summ)}

    return params, compute, render


def cmd_report(a, cfg, out_dir: Path):
    """Index of every manifest under out_dir."""
    rows = []
    for man in sorted(out_dir.glob("*/*/manifest.json")):
        m = json.loads(man.read_text())
        rows.append([m["command"], m["key"][:16], canonical(m["params"]).decode(),
                     ";".join(sorted(m["artifacts"]))])
    text = _csv(["command", "key", "params", "artifacts"], rows)
    (out_dir / "report.csv").write_text(text, newline="")
    sys.stdout.write(text)
    return 0


COMMANDS = {
    "disc": cmd_disc,
    "classes": cmd_classes,
    "packets": cmd_packets,
    "equidist": cmd_equidist,
    "hecke": cmd_hecke,
    "building": cmd_building,
    "zeta": cmd_zeta,
    "cube-roots": cmd_cube_roots,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="toruslab", description="Periodic torus orbits from orders in number fields.")
    ap.add_argument("--config", help="ini file with [run], [equidist], [hecke], [zeta], [caps]")
    ap.add_argument("--out", help="output directory (else $TORUSLAB_OUT, else config)")
    ap.add_argument("--no-cache", action="store_true", help="recompute even when a cached result exists")
    ap.add_argument("--workers", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("disc", help="discriminants of Z[t]/P and the maximal order")
    p.add_argument("--poly", required=True)
    p = sub.add_parser("classes", help="coarse ideal classes grouped into packets (CSV)")
    p.add_argument("--poly", required=True)
    p = sub.add_parser("packets", help="packet sizes, regulators and volumes")
    p.add_argument("--poly", required=True)
    p = sub.add_parser("equidist", help="Weyl averages over a family of packets")
    p.add_argument("--family", choices=["quadratic", "cubic"])
    p.add_argument("--kmin", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--count", type=int)
    p.add_argument("--scheme", choices=["grid", "monte_carlo"])
    p.add_argument("--step", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p = sub.add_parser("hecke", help="orbit average against its unfolded lattice sum")
    p.add_argument("--poly", required=True)
    p.add_argument("--class-index", type=int)
    p.add_argument("--sigma", type=float)
    p = sub.add_parser("building", help="local discriminants, unit density and distance at p")
    p.add_argument("--prime", type=int, required=True)
    p.add_argument("--poly", required=True)
    p.add_argument("--conjugate", help='rational matrix "a,b;c,d" conjugating the companion matrix')
    p = sub.add_parser("zeta", help="class number formula, volume trend or character sums")
    p.add_argument("--poly")
    p.add_argument("--B", type=int)
    p.add_argument("--trend", choices=["quadratic", "cubic"])
    p.add_argument("--charsum", choices=["quadratic", "cubic"])
    p.add_argument("--kmin", type=int, default=25)
    p.add_argument("--kmax", type=int, default=25000)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int)
    p = sub.add_parser("cube-roots", help="integral matrices with char poly P in a box window")
    p.add_argument("--poly", required=True)
    p.add_argument("--bound", type=float, default=2.0)
    sub.add_parser("report", help="index of all artifacts under the output directory")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(a.config)
        out = a.out or os.environ.get("TORUSLAB_OUT") or _get(cfg, "run", "out_dir")
        out_dir = Path(out)
        if a.command == "report":
            return cmd_report(a, cfg, out_dir)
        params, compute, render = COMMANDS[a.command](a, cfg)
        key = stable_key(a.command, params)
        use_cache = not a.no_cache and _get(cfg, "run", "cache").lower() in ("yes", "true", "1", "on")
        cache = Cache(out_dir, use_cache)
        result = cache.get(key)
        if result is None:
            result = compute()
            # round-trip through JSON so cached and fresh runs render identically
            result = json.loads(canonical(result))
            cache.put(key, result)
        dest = write_artifacts(out_dir, a.command, params, key, render(result))
        print(dest)
        return 0
    except ToruslabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def main():
    sys.exit(run())
