import argparse
import sys

from lp2eigen.process_run import process_run
from lp2eigen.read_inputs import MODES


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Solve the L_p sigma_k curvature problem or its eigenvalue problem."
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--allow-non-even", action="store_true")
    parser.add_argument("--out", default=None, help="output directory override")
    args = parser.parse_args(argv)

    return process_run(
        args.config,
        mode=args.mode,
        allow_non_even=args.allow_non_even,
        output_dir=args.out,
        raise_exceptions=False,
    )


if __name__ == "__main__":
    sys.exit(main())
