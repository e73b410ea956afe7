import argparse
import logging
import os
import sys
from typing import List, Optional

import yaml

from sscan.cli.run_config import RunConfig, load_run_config
from sscan.constants import (DEFAULT_BAND_TRIPLE, DEFAULT_MARGIN, DEFAULT_SIGMA, DEFAULT_TILE, DEFAULT_TRAIN_ROWS,
                             EXIT_INVALID, EXIT_IO, EXIT_NUMERICAL, EXIT_OK, GRADCHECK_TOLERANCE, NOISE_SIGMAS)
from sscan.errors import BandMismatchError, CheckpointError, CubeFormatError, NumericalError, ShapeError, SscanError
from sscan.hsi import NoiseSpec, add_gaussian_noise, crop, normalize, read_any, save_cube, split_spatial
from sscan.metrics import evaluate_pair, noisy_baseline, write_error_map, write_false_color
from sscan.network import GRADCHECK_OPERATIONS, ModelConfig, build_model, denoise_cube, load_checkpoint
from sscan.network import run_gradcheck_suite
from sscan.training import TrainConfig, fit

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(message)s (%(filename)s:%(lineno)s)"

PREPARED_TRAIN = "train.hsic"
PREPARED_TEST_CLEAN = "test_clean.hsic"
PREPARED_TEST_NOISY = "test_noisy.hsic"


def _progress() -> bool:
    return logging.getLogger().isEnabledFor(logging.INFO)


def _verbosity() -> str:
    return logging.getLevelName(logging.getLogger().getEffectiveLevel())


def cmd_simulate_noise(args: argparse.Namespace) -> int:
    """Add Gaussian noise to a clean cube, write it and print the quality of the noisy cube."""
    noise = NoiseSpec(sigma_8bit=args.sigma, seed=args.seed)
    RunConfig(subcommand="simulate-noise", paths={"input": args.input, "output": args.output, "report": args.report},
              noise=noise, verbosity=_verbosity()).log()
    clean = read_any(args.input)
    noisy = add_gaussian_noise(clean, noise)
    save_cube(noisy, args.output)
    report = evaluate_pair(clean, noisy)
    print(report.format_line())
    if args.report:
        with open(args.report, "w") as stream:
            stream.write(report.format_block())
    return EXIT_OK


def _model_config(args: argparse.Namespace, base: Optional[ModelConfig], bands: int) -> ModelConfig:
    overrides = {"k": args.k, "o": args.overlap, "n_ssab": args.n_ssab, "trunk_channels": args.channels,
                 "group_channels": args.group_channels, "seed": args.seed}
    if base is None:
        return ModelConfig(bands=bands, **{key: value for key, value in overrides.items() if value is not None})
    if args.n_ssab is not None and base.fusion_ssab == base.n_ssab:
        overrides["fusion_ssab"] = args.n_ssab
    config = base.replace(**overrides)
    if config.bands != bands:
        raise BandMismatchError(f"the run file declares {config.bands} bands, the training cube has {bands}")
    return config


def _train_config(args: argparse.Namespace, base: Optional[TrainConfig]) -> TrainConfig:
    return (base or TrainConfig()).replace(
        epochs=args.epochs, batch_size=args.batch, patch_size=args.patch, patches_per_epoch=args.patches,
        initial_lr=args.lr, decay_epoch=args.decay_epoch, sigma=args.sigma, eval_every=args.eval_every,
        clip_norm=args.clip_norm, tile=args.tile, margin=args.margin, checkpoint_dir=args.checkpoint)


def cmd_train(args: argparse.Namespace) -> int:
    """
    Train a model on a normalized training cube, evaluating on a fixed (clean, noisy) test pair.
    Prints the noisy baseline, the best evaluation and the MPSNR gain.
    """
    base_model, base_train = load_run_config(args.config) if args.config else (None, None)
    train = read_any(args.input)
    test_clean = read_any(args.clean)
    test_noisy = read_any(args.noisy)
    if test_clean.shape != test_noisy.shape:
        raise ShapeError(f"test cubes differ: clean {test_clean.shape} vs noisy {test_noisy.shape}")
    if test_clean.bands != train.bands:
        raise BandMismatchError(f"the training cube has {train.bands} bands, the test cubes {test_clean.bands}")

    model_config = _model_config(args, base_model, train.bands)
    train_config = _train_config(args, base_train)
    RunConfig(subcommand="train", paths={"input": args.input, "clean": args.clean, "noisy": args.noisy,
                                         "checkpoint": train_config.checkpoint_dir, "config": args.config},
              model=model_config.to_dict(), train=train_config.to_dict(), verbosity=_verbosity()).log()
    if train_config.checkpoint_dir is None:
        logging.warning("no --checkpoint directory given; the trained model will not be saved")

    model = build_model(model_config)
    report = fit(model, train, test_clean, test_noisy, train_config, progress=_progress())
    print(f"epochs: {report.epochs}")
    if report.best_epoch is not None:
        baseline = evaluate_pair(test_clean, test_noisy)
        best = report.evaluations[report.best_epoch]
        print(f"noisy:  {baseline.format_line()}")
        print(f"best:   {best.format_line()} (epoch {report.best_epoch})")
        print(f"gain:   {best.mpsnr - baseline.mpsnr:+.2f} dB")
    return EXIT_OK


def cmd_denoise(args: argparse.Namespace) -> int:
    """Denoise a cube with a trained checkpoint, tiling large cubes."""
    tile = DEFAULT_TILE if args.tile is None else args.tile
    margin = DEFAULT_MARGIN if args.margin is None else args.margin
    RunConfig(subcommand="denoise", paths={"checkpoint": args.checkpoint, "input": args.input, "output": args.output},
              verbosity=_verbosity()).log()
    model = load_checkpoint(args.checkpoint)
    cube = read_any(args.input)
    logging.info(f"tile={tile} margin={margin} model={model.config!r}")
    save_cube(denoise_cube(model, cube, tile, margin, progress=_progress()), args.output)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Print, and optionally write, the quality measures of a test cube against a clean one."""
    RunConfig(subcommand="evaluate", paths={"clean": args.clean, "input": args.input, "report": args.report},
              verbosity=_verbosity()).log()
    report = evaluate_pair(read_any(args.clean), read_any(args.input))
    print(report.format_line())
    if args.report:
        with open(args.report, "w") as stream:
            stream.write(report.format_line() + "\n")
            stream.write(report.format_block())
    return EXIT_OK


def cmd_error_map(args: argparse.Namespace) -> int:
    """Write the mean absolute error of three bands as a graymap."""
    RunConfig(subcommand="error-map", paths={"clean": args.clean, "input": args.input, "output": args.output},
              verbosity=_verbosity()).log()
    anchor = write_error_map(read_any(args.clean), read_any(args.input), args.output, args.bands, args.max_error)
    print(f"max_error={anchor:.8g}")
    return EXIT_OK


def cmd_false_color(args: argparse.Namespace) -> int:
    RunConfig(subcommand="false-color", paths={"input": args.input, "output": args.output},
              verbosity=_verbosity()).log()
    write_false_color(read_any(args.input), args.output, args.bands)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    """
    Run the finite-difference suite. Every check is printed; the exit status is 0 only if all of
    them are within the tolerance.
    """
    RunConfig(subcommand="gradcheck", verbosity=_verbosity()).log()
    results = run_gradcheck_suite(args.ops, args.tolerance, args.seed)
    for result in results:
        print(result.format_line())
    failed = [result for result in results if not result.passed]
    for result in failed:
        logging.error(f"gradient check failed: {result.operation}[{result.target}] "
                      f"error {result.max_error:.3e} at {result.worst_index}")
    return EXIT_NUMERICAL if failed else EXIT_OK


def _test_noise_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    _, base_train = load_run_config(args.config) if args.config else (None, None)
    return (base_train or TrainConfig()).test_noise_seed


def cmd_prepare(args: argparse.Namespace) -> int:
    """
    Normalize a raw cube (HSIC or ENVI), keep its first rows for training and write the training
    cube, the clean test window and a fixed noisy copy of it into the output directory.
    The noise seed is --seed, else test_noise_seed of the --config run file, else the default
    test_noise_seed.
    """
    noise = NoiseSpec(sigma_8bit=args.sigma, seed=_test_noise_seed(args))
    RunConfig(subcommand="prepare", paths={"input": args.input, "output": args.output, "config": args.config},
              noise=noise, crop=tuple(args.crop) if args.crop else None, verbosity=_verbosity()).log()
    cube = normalize(read_any(args.input))
    train, remainder = split_spatial(cube, args.train_rows)
    if args.crop:
        x, y, h, w = args.crop
        if y < args.train_rows:
            logging.warning(f"the test window starts at row {y}, inside the {args.train_rows} training rows")
        test_clean = crop(cube, x, y, h, w)
    else:
        test_clean = remainder
    test_noisy = add_gaussian_noise(test_clean, noise)

    os.makedirs(args.output, exist_ok=True)
    for name, part in ((PREPARED_TRAIN, train), (PREPARED_TEST_CLEAN, test_clean), (PREPARED_TEST_NOISY, test_noisy)):
        path = os.path.join(args.output, name)
        save_cube(part, path)
        print(f"{path}: {part.height}×{part.width}×{part.bands}")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    """Print the quality of the clean cube under each noise level, without denoising."""
    RunConfig(subcommand="baseline", paths={"clean": args.clean}, verbosity=_verbosity()).log()
    table = noisy_baseline(read_any(args.clean), args.sigmas, args.seed)
    for sigma, report in table.items():
        print(f"sigma={sigma:g} {report.format_line()}")
    return EXIT_OK


def _default(text: str, value) -> str:
    return f"{text} (default: {value})"


def _add_model_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("model", "override the model section of --config")
    group.add_argument("--k", type=int, help=_default("bands per group", 4))
    group.add_argument("--overlap", type=int, help=_default("bands shared by adjacent groups", 2))
    group.add_argument("--n-ssab", type=int, help=_default("SSABs per SSAN", 10))
    group.add_argument("--channels", type=int, help=_default("trunk feature channels", 64))
    group.add_argument("--group-channels", type=int, help=_default("channels per band group", 16))
    group.add_argument("--seed", type=int, help=_default("initialization seed", 0))


def _add_train_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("training", "override the train section of --config")
    group.add_argument("--epochs", type=int, help=_default("training epochs", 100))
    group.add_argument("--batch", type=int, help=_default("patches per step", 16))
    group.add_argument("--patch", type=int, help=_default("patch side", 40))
    group.add_argument("--patches", type=int, help=_default("patches per epoch", 2000))
    group.add_argument("--lr", type=float, help=_default("initial learning rate", 1e-4))
    group.add_argument("--decay-epoch", type=int, help=_default("first epoch at the decayed learning rate", 50))
    group.add_argument("--sigma", type=float, help=_default("training noise level, 8-bit units", DEFAULT_SIGMA))
    group.add_argument("--eval-every", type=int, help=_default("epochs between test evaluations", 1))
    group.add_argument("--clip-norm", type=float, help=_default("global gradient-norm limit", "off"))
    group.add_argument("--tile", type=int, help=_default("evaluation tile side", DEFAULT_TILE))
    group.add_argument("--margin", type=int, help=_default("evaluation tile margin", DEFAULT_MARGIN))
    group.add_argument("--checkpoint", help=_default("directory for train.log, best.ssck and last.ssck", "none"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log DEBUG messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")

    parser = argparse.ArgumentParser(prog="sscan", description="Hyperspectral image denoising with SSCAN.")
    commands = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")
    formatter = argparse.ArgumentDefaultsHelpFormatter

    sub = commands.add_parser("simulate-noise", parents=[common], formatter_class=formatter,
                              help="add Gaussian noise to a clean cube")
    sub.add_argument("--input", required=True, help="clean cube")
    sub.add_argument("--output", required=True, help="noisy cube to write")
    sub.add_argument("--sigma", type=float, default=DEFAULT_SIGMA, help="noise level in 8-bit units")
    sub.add_argument("--seed", type=int, default=0, help="noise seed")
    sub.add_argument("--report", help="also write the quality report to this file")
    sub.set_defaults(handler=cmd_simulate_noise)

    sub = commands.add_parser("train", parents=[common], help="train a model")
    sub.add_argument("--input", required=True, help="normalized training cube")
    sub.add_argument("--clean", required=True, help="clean test cube")
    sub.add_argument("--noisy", required=True, help="noisy test cube")
    sub.add_argument("--config", help=_default("YAML run file with model and train sections", "none"))
    _add_model_flags(sub)
    _add_train_flags(sub)
    sub.set_defaults(handler=cmd_train)

    sub = commands.add_parser("denoise", parents=[common], help="denoise a cube with a checkpoint")
    sub.add_argument("--checkpoint", required=True, help="SSCK checkpoint")
    sub.add_argument("--input", required=True, help="noisy cube")
    sub.add_argument("--output", required=True, help="denoised cube to write")
    sub.add_argument("--tile", type=int, help=_default("spatial tile side", DEFAULT_TILE))
    sub.add_argument("--margin", type=int, help=_default("overlap context around each tile", DEFAULT_MARGIN))
    sub.set_defaults(handler=cmd_denoise)

    sub = commands.add_parser("evaluate", parents=[common], formatter_class=formatter,
                              help="MPSNR, MSSIM, SAM and ERGAS of a test cube")
    sub.add_argument("--clean", required=True, help="reference cube")
    sub.add_argument("--input", required=True, help="cube under evaluation")
    sub.add_argument("--report", help="also write the report to this file")
    sub.set_defaults(handler=cmd_evaluate)

    sub = commands.add_parser("error-map", parents=[common], formatter_class=formatter,
                              help="write an absolute-error graymap")
    sub.add_argument("--clean", required=True, help="reference cube")
    sub.add_argument("--input", required=True, help="cube under evaluation")
    sub.add_argument("--output", required=True, help="PGM file to write")
    sub.add_argument("--bands", type=int, nargs=3, default=list(DEFAULT_BAND_TRIPLE), metavar="BAND",
                     help="the three bands averaged")
    sub.add_argument("--max-error", type=float, help="error mapped to white; the largest error if not given")
    sub.set_defaults(handler=cmd_error_map)

    sub = commands.add_parser("false-color", parents=[common], formatter_class=formatter,
                              help="write a false-colour composite")
    sub.add_argument("--input", required=True, help="cube")
    sub.add_argument("--output", required=True, help="PPM file to write")
    sub.add_argument("--bands", type=int, nargs=3, default=list(DEFAULT_BAND_TRIPLE), metavar="BAND",
                     help="red, green and blue bands")
    sub.set_defaults(handler=cmd_false_color)

    sub = commands.add_parser("gradcheck", parents=[common], formatter_class=formatter,
                              help="check analytic gradients against finite differences")
    sub.add_argument("--ops", nargs="+", choices=list(GRADCHECK_OPERATIONS), metavar="OP",
                     help=f"operations to check, all if not given; one of {', '.join(GRADCHECK_OPERATIONS)}")
    sub.add_argument("--tolerance", type=float, default=GRADCHECK_TOLERANCE, help="largest accepted relative error")
    sub.add_argument("--seed", type=int, default=0, help="seed of the random inputs")
    sub.set_defaults(handler=cmd_gradcheck)

    sub = commands.add_parser("prepare", parents=[common], formatter_class=formatter,
                              help="normalize and split a raw cube into training and test cubes")
    sub.add_argument("--input", required=True, help="raw cube, HSIC or an ENVI .hdr")
    sub.add_argument("--output", required=True,
                     help=f"directory receiving {PREPARED_TRAIN}, {PREPARED_TEST_CLEAN} and {PREPARED_TEST_NOISY}")
    sub.add_argument("--train-rows", type=int, default=DEFAULT_TRAIN_ROWS, help="leading rows kept for training")
    sub.add_argument("--crop", type=int, nargs=4, metavar=("X", "Y", "H", "W"),
                     help="test window in full-cube coordinates (column, row, height, width); "
                          "the rows after the training rows if not given")
    sub.add_argument("--sigma", type=float, default=DEFAULT_SIGMA, help="noise level of the noisy test cube")
    sub.add_argument("--config", help="YAML run file whose train.test_noise_seed seeds the noisy test cube")
    sub.add_argument("--seed", type=int,
                     help="noise seed of the noisy test cube; overrides test_noise_seed of --config, which defaults to 2")
    sub.set_defaults(handler=cmd_prepare)

    sub = commands.add_parser("baseline", parents=[common], formatter_class=formatter,
                              help="quality of a clean cube under each noise level")
    sub.add_argument("--clean", required=True, help="normalized clean cube")
    sub.add_argument("--sigmas", type=float, nargs="+", default=list(NOISE_SIGMAS), help="noise levels")
    sub.add_argument("--seed", type=int, default=0, help="base noise seed")
    sub.set_defaults(handler=cmd_baseline)
    return parser


def configure_logging(args: argparse.Namespace):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(format=LOG_FORMAT, level=level)
    logging.getLogger().setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the `sscan` command.

    Exit codes: 0 success, 2 usage error, 3 I/O or file-format error, 4 numerical failure,
    5 invalid input.
    """
    args = build_parser().parse_args(argv)
    configure_logging(args)
    try:
        return args.handler(args)
    except NumericalError as e:
        logging.error(f"{args.subcommand}: numerical failure: {e}")
        return EXIT_NUMERICAL
    except (OSError, CubeFormatError, CheckpointError, yaml.YAMLError) as e:
        logging.error(f"{args.subcommand}: {e}")
        return EXIT_IO
    except (ValueError, SscanError) as e:
        logging.error(f"{args.subcommand}: invalid input: {e}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
