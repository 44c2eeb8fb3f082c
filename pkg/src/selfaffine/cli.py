"""Command-line surface: render, hull, interior-cert, expand, decide, scan,
uniqueness, classify.

Exit codes: 0 success, 2 certified-negative outcomes (membership Out,
uniqueness SearchExhausted), 1 runtime errors, 64 usage errors.  A flat
``key = value`` config file can seed any flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

from .core import SystemSpec
from .errors import SelfAffineError
from .expansion import (
    InteriorCertificate,
    expand_point,
    interior_radius,
    jordan_poly,
    mixed_real_poly,
)
from .hull import (
    attractor_hull,
    hull_complex_irrational,
    hull_complex_rational,
    hull_jordan,
    hull_mixed_equal,
    hull_mixed_real,
)
from .membership import In, Out, decide_point, scan_region
from .render import (
    ChaosGame,
    RasterConfig,
    Subdivision,
    render_attractor,
    render_overlay_uniqueness,
)
from .uniqueness import (
    SearchBounds,
    certify_uniqueness,
    classify_mixed_equal,
    classify_rational,
    verify_uniqueness_certificate,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_fraction(text: str) -> tuple[int, int]:
    try:
        p_str, q_str = text.split("/")
        return int(p_str), int(q_str)
    except ValueError as exc:
        raise _UsageError(f"expected a fraction p/q, got {text!r}") from exc


def _spec_from_args(args) -> SystemSpec:
    case = args.case
    if case in ("positive", "positive_real"):
        _require(args, "lam", "mu")
        return SystemSpec.positive_real(args.lam, args.mu)
    if case in ("mixed", "mixed_real"):
        _require(args, "lam", "mu")
        return SystemSpec.mixed_real(args.lam, args.mu)
    if case == "jordan":
        _require(args, "nu")
        return SystemSpec.jordan(args.nu)
    if case == "complex":
        if getattr(args, "angle", None):
            _require(args, "rho")
            p, q = _parse_fraction(args.angle)
            theta = 2 * math.pi * p / q
            return SystemSpec.complex_pair(
                args.rho * math.cos(theta), args.rho * math.sin(theta)
            )
        _require(args, "re", "im")
        return SystemSpec.complex_pair(args.re, args.im)
    raise _UsageError(f"unknown case {case!r}")


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + {"lam": "lambda"}.get(n, n) for n in missing)
        raise _UsageError(f"case {args.case!r} requires {flags}")


def _add_spec_flags(sub, cases=("positive", "mixed", "jordan", "complex"), required=True):
    sub.add_argument("--case", required=required, choices=cases)
    sub.add_argument("--lambda", dest="lam", type=float)
    sub.add_argument("--mu", type=float)
    sub.add_argument("--nu", type=float)
    sub.add_argument("--re", type=float)
    sub.add_argument("--im", type=float)
    sub.add_argument("--rho", type=float, help="modulus for --angle p/q")
    sub.add_argument("--angle", help="rational angle as p/q (complex case)")
    sub.add_argument("--config", help="flat key = value file seeding flags")


def _dump_json(obj, path: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_render(args) -> int:
    spec = _spec_from_args(args)
    if args.method == "chaos":
        method = ChaosGame(iterations=args.iterations, seed=args.seed,
                           burn_in=args.burn_in)
    else:
        method = Subdivision(depth=args.depth)
    size = args.size
    config = RasterConfig(
        width=args.width or size,
        height=args.height or size,
        method=method,
        threads=args.threads,
    )
    raster = render_attractor(spec, config)
    overlay = None
    if args.overlay_cert:
        with open(args.overlay_cert) as fh:
            cert = verify_uniqueness_certificate(json.load(fh))
        overlay = render_overlay_uniqueness(spec, cert, config)
    if args.out.endswith(".png"):
        raster.save(args.out, overlay=overlay)
    else:
        raster.save(args.out)
        if overlay is not None:
            overlay.save(args.out + ".overlay.pgm")
    return EXIT_OK


def _cmd_hull(args) -> int:
    eps = args.epsilon
    if args.case == "complex" and args.angle:
        p, q = _parse_fraction(args.angle)
        _require(args, "rho")
        poly = hull_complex_rational(args.rho, p, q, eps)
    elif args.case == "complex":
        _require(args, "re", "im")
        poly = hull_complex_irrational(complex(args.re, args.im), eps)
    elif args.case == "mixed" and args.mu is not None and args.lam == args.mu:
        poly = hull_mixed_equal(args.lam)
    elif args.case == "mixed":
        _require(args, "lam", "mu")
        poly = hull_mixed_real(args.lam, args.mu, eps)
    elif args.case == "jordan":
        _require(args, "nu")
        poly = hull_jordan(args.nu, eps)
    else:
        poly = attractor_hull(_spec_from_args(args), eps)
    if args.out.endswith(".json"):
        payload = {
            "kind": "hull",
            "closed": poly.closed,
            "vertices": [[float(x), float(y)] for x, y in poly.vertices],
        }
        if poly.addresses is not None:
            payload["addresses"] = [
                None if a is None else str(a) for a in poly.addresses
            ]
        _dump_json(payload, args.out)
    else:
        lines = [f"{x:.17g},{y:.17g}" for x, y in poly.vertices]
        text = "\n".join(lines) + "\n"
        if args.out == "-":
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
    return EXIT_OK


def _make_interior_certificate(spec: SystemSpec) -> InteriorCertificate:
    if spec.case == "mixed_real":
        return interior_radius(spec, mixed_real_poly(*spec.params))
    if spec.case == "jordan":
        return interior_radius(spec, jordan_poly(spec.params[0]))
    raise _UsageError("interior certificates require --case mixed or jordan")


def _cmd_interior_cert(args) -> int:
    if args.verify:
        with open(args.verify) as fh:
            cert = InteriorCertificate.from_json_dict(json.load(fh))
        sys.stdout.write(
            f"verified: delta = {cert.delta:.12g}, "
            f"columns = {list(cert.submatrix_columns)}\n"
        )
        return EXIT_OK
    if args.case is None:
        raise _UsageError("either --case or --verify is required")
    spec = _spec_from_args(args)
    cert = _make_interior_certificate(spec)
    _dump_json(cert.to_json_dict(), args.out)
    return EXIT_OK


def _cmd_expand(args) -> int:
    spec = _spec_from_args(args)
    cert = _make_interior_certificate(spec)
    run = expand_point(spec, cert.poly, tuple(args.target), args.steps, cert)
    _dump_json(run.to_json_dict(), args.out)
    return EXIT_OK


def _cmd_decide(args) -> int:
    spec = _spec_from_args(args)
    verdict = decide_point(
        spec, tuple(args.point), args.max_depth, max_nodes=args.max_nodes
    )
    if isinstance(verdict, In):
        payload = {
            "verdict": "in",
            "address_prefix": str(verdict.address_prefix),
            "residual_error": verdict.residual_error,
        }
        code = EXIT_OK
    elif isinstance(verdict, Out):
        payload = {
            "verdict": "out",
            "depth": verdict.depth,
            "min_separation": verdict.min_separation,
        }
        code = EXIT_NEGATIVE
    else:
        payload = {"verdict": "unknown", "depth": verdict.depth}
        code = EXIT_OK
    _dump_json(payload, args.out)
    return code


def _cmd_scan(args) -> int:
    if args.case == "jordan":
        rect = (args.rect[0], args.rect[1])
        case = "jordan"
    else:
        if len(args.rect) != 4:
            raise _UsageError("mixed scans need --rect LAM_LO LAM_HI MU_LO MU_HI")
        rect = ((args.rect[0], args.rect[1]), (args.rect[2], args.rect[3]))
        case = "mixed_real"
    scan = scan_region(
        case, rect, args.resolution, args.max_depth,
        max_nodes=args.max_nodes, threads=args.threads,
    )
    with open(args.out, "w") as fh:
        fh.write(scan.to_csv())
    if args.cert_out:
        payload = {
            cid: cert.to_json_dict() for cid, cert in scan.certificates.items()
        }
        _dump_json(payload, args.cert_out)
    return EXIT_OK


def _cmd_uniqueness(args) -> int:
    if args.verify:
        with open(args.verify) as fh:
            cert = verify_uniqueness_certificate(json.load(fh))
        sys.stdout.write("verified:\n" + cert.format_report() + "\n")
        return EXIT_OK
    if args.case is None:
        raise _UsageError("either --case or --verify is required")
    spec = _spec_from_args(args)
    bounds = SearchBounds(
        max_prefix=args.max_prefix, max_power=args.max_power, window=args.window
    )
    try:
        cert = certify_uniqueness(spec, bounds)
    except SelfAffineError as exc:
        sys.stderr.write(f"search exhausted: {exc}\n")
        return EXIT_NEGATIVE
    _dump_json(cert.to_json_dict(), args.out)
    if args.report:
        sys.stdout.write(cert.format_report() + "\n")
    return EXIT_OK


def _cmd_classify(args) -> int:
    if args.mixed_equal_lambda is not None:
        result = classify_mixed_equal(args.mixed_equal_lambda)
    else:
        if not args.angle or args.rho is None:
            raise _UsageError("classify needs --rho and --angle p/q, "
                              "or --mixed-equal-lambda")
        p, q = _parse_fraction(args.angle)
        result = classify_rational(args.rho, p, q)
    _dump_json(result.to_json_dict(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser construction
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="selfaffine", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("render", help="raster the attractor to PGM/PNG")
    _add_spec_flags(p)
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--method", choices=("chaos", "subdivision"), default="chaos")
    p.add_argument("--iterations", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=100)
    p.add_argument("--depth", type=int, default=24)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--overlay-cert", dest="overlay_cert")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_render)

    p = subs.add_parser("hull", help="convex hull vertices to CSV/JSON")
    _add_spec_flags(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_hull)

    p = subs.add_parser("interior-cert", help="interior certificate JSON")
    _add_spec_flags(p, cases=("mixed", "jordan"), required=False)
    p.add_argument("--out")
    p.add_argument("--verify", help="re-verify a stored certificate")
    p.set_defaults(handler=_cmd_interior_cert)

    p = subs.add_parser("expand", help="digit address for a target point")
    _add_spec_flags(p, cases=("mixed", "jordan"))
    p.add_argument("--target", nargs=2, type=float, required=True)
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_expand)

    p = subs.add_parser("decide", help="certified point membership")
    _add_spec_flags(p)
    p.add_argument("--point", nargs=2, type=float, required=True)
    p.add_argument("--max-depth", dest="max_depth", type=int, default=24)
    p.add_argument("--max-nodes", dest="max_nodes", type=int, default=100_000)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_decide)

    p = subs.add_parser("scan", help="parameter-region scan to CSV")
    p.add_argument("--case", required=True, choices=("mixed", "jordan"))
    p.add_argument("--rect", nargs="+", type=float, required=True)
    p.add_argument("--resolution", type=int, required=True)
    p.add_argument("--max-depth", dest="max_depth", type=int, default=14)
    p.add_argument("--max-nodes", dest="max_nodes", type=int, default=4000)
    p.add_argument("--threads", type=int)
    p.add_argument("--config", help="flat key = value file seeding flags")
    p.add_argument("--out", required=True)
    p.add_argument("--cert-out", dest="cert_out")
    p.set_defaults(handler=_cmd_scan)

    p = subs.add_parser("uniqueness", help="uniqueness certificate search")
    _add_spec_flags(p, required=False)
    p.add_argument("--max-prefix", dest="max_prefix", type=int, default=24)
    p.add_argument("--max-power", dest="max_power", type=int, default=12)
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--out")
    p.add_argument("--verify", help="re-verify a stored certificate")
    p.add_argument("--report", action="store_true")
    p.set_defaults(handler=_cmd_uniqueness)

    p = subs.add_parser("classify", help="rational-angle uniqueness class")
    p.add_argument("--rho", type=float)
    p.add_argument("--angle", help="rational angle p/q")
    p.add_argument("--mixed-equal-lambda", dest="mixed_equal_lambda", type=float)
    p.add_argument("--config", help="flat key = value file seeding flags")
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_classify)

    return parser


def _read_config(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"config line without '=': {raw.strip()!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip().strip("\"'")
    return values


_CONFIG_ALIASES = {"lambda": "lam", "burn-in": "burn_in", "max-depth": "max_depth",
                   "max-nodes": "max_nodes", "max-prefix": "max_prefix",
                   "max-power": "max_power", "cert-out": "cert_out",
                   "overlay-cert": "overlay_cert",
                   "mixed-equal-lambda": "mixed_equal_lambda"}


def _coerce(value: str):
    for conv in (int, float):
        try:
            return conv(value)
        except ValueError:
            continue
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    return value


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        # config file sets defaults; explicit flags override them
        if "--config" in argv:
            path = argv[argv.index("--config") + 1]
            config = _read_config(path)
            defaults = {}
            for key, value in config.items():
                dest = _CONFIG_ALIASES.get(key, key.replace("-", "_"))
                defaults[dest] = _coerce(value)
            parser.set_defaults(**defaults)
            for sub_action in parser._subparsers._group_actions:
                for sub in sub_action.choices.values():
                    sub.set_defaults(
                        **{
                            d: v
                            for d, v in defaults.items()
                            if any(a.dest == d for a in sub._actions)
                        }
                    )
        args = parser.parse_args(argv)
        return args.handler(args)
    except _UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except SelfAffineError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
