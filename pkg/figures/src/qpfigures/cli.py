"""Script entry points: render-profile and render-winding."""

import argparse
import sys

from .render import RenderError, render_profile, render_winding


def main_profile(argv=None):
    p = argparse.ArgumentParser(
        prog="render-profile",
        description="render a jensen profile CSV + JSON summary to an image",
    )
    p.add_argument("csv", help="profile CSV (eps, L_measured, L_predicted)")
    p.add_argument("summary", help="JSON summary with turning points")
    p.add_argument("out", help="output image path (.png, .pdf, .svg)")
    args = p.parse_args(argv)
    try:
        meta = render_profile(args.csv, args.summary, args.out)
    except (RenderError, OSError, ValueError) as exc:
        print(f"render-profile: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {meta['out']}: {meta['points']} points, "
          f"{meta['turning_markers']} turning markers")
    return 0


def main_winding(argv=None):
    p = argparse.ArgumentParser(
        prog="render-winding",
        description="render a winding sweep CSV to a step chart",
    )
    p.add_argument("csv", help="winding CSV (eps, nu)")
    p.add_argument("out", help="output image path")
    args = p.parse_args(argv)
    try:
        meta = render_winding(args.csv, args.out)
    except (RenderError, OSError, ValueError) as exc:
        print(f"render-winding: {exc}", file=sys.stderr)
        return 1
    banner = " (warning banner shown)" if meta["warning_banner"] else ""
    print(f"wrote {meta['out']}: {meta['points']} points{banner}")
    return 0


if __name__ == "__main__":
    sys.exit(main_profile())
