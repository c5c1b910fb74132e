"""HLS quality-of-results prediction: feature extraction, training and evaluation"""


import argparse
import configparser
import logging
import math
import sys
from pathlib import Path
from typing import Any, NoReturn, Sequence

from lib.dataset import (
    Labels,
    features_frame,
    load_csv,
    load_design_classes,
    load_features,
    save_csv,
)
from lib.datatypes import FeatureSource, ModelKind, SplitProtocol, Target
from lib.errormessage import ErrorMessageConsoleHandler
from lib.exceptions import (
    MalformedPragma,
    ParseError,
    QorError,
    SchemaMismatch,
    UnknownOpcode,
    UnresolvedLabel,
)
from lib.features import FAMILIES, INPUT_SOURCES, FeatureVector, extract, importance_report
from lib.graphs import dump_graphs
from lib.helpers import parse_number_list, read_text
from lib.synthetic import synthetic_generate
from regressors.model import TrainedModel, deserialize, predict_many, serialize, train
from results import ResultSheet
from results.evaluation import (
    evaluate,
    frequency_sweep,
    learning_curve,
    model_comparison,
    pareto_front,
)
from results.reportrows import (
    ImportanceResultRow,
    PredictionResultRow,
    SourceImportanceResultRow,
)
from results.resultrow import ResultRow
from results.tables import raw_csv, to_csv, to_sections, to_text, write_text
from results.workbook import ResultWorkBook

CONFIG_PATH = "./config.ini"
LOGFORMAT = "%(asctime)s %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_DATA_ERROR = 2
EXIT_USAGE = 64


class UsageError(Exception):
    "Raised instead of exiting when command line arguments are wrong"


class ArgumentParser(argparse.ArgumentParser):
    "Parser reporting usage errors with exit code 64"

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    "Command line of all subcommands"
    parser = ArgumentParser(prog="qorpredict", description=__doc__)
    parser.add_argument("--config", default=CONFIG_PATH, help="INI file with defaults")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def command(name: str, help_text: str) -> ArgumentParser:
        sub = commands.add_parser(name, help=help_text, description=help_text)
        sub.add_argument("--out", help="output file, standard output when omitted")
        return sub

    def kind_option(sub: ArgumentParser, required: bool = True) -> None:
        sub.add_argument(
            "--kind", choices=[k.value for k in ModelKind], required=required, help="model family"
        )

    def target_option(sub: ArgumentParser, required: bool = True) -> None:
        sub.add_argument(
            "--target", choices=[t.value for t in Target], required=required, help="QoR metric"
        )

    def seed_option(sub: ArgumentParser) -> None:
        sub.add_argument("--seed", type=int, help="random seed, config SEED by default")

    def param_option(sub: ArgumentParser) -> None:
        sub.add_argument(
            "--param",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="hyperparameter override, repeatable",
        )

    sub = command("extract", "extract the feature row of one design variant")
    sub.add_argument("--source", help="behavioral C/C++ source with HLS pragmas")
    sub.add_argument("--ir", required=True, help="textual LLVM IR of the design")
    sub.add_argument("--top", required=True, help="top function name")
    sub.add_argument("--freq-mhz", type=float, required=True, help="target clock frequency")
    sub.add_argument("--design", help="design name column of the row")
    sub.add_argument("--variant", help="variant column of the row")
    sub.add_argument("--device", help="device column of the row")
    sub.add_argument("--dump-graph", metavar="PATH", help="write CDFG and callgraph as DOT")

    sub = command("train", "train one model of one target")
    sub.add_argument("--dataset", required=True, help="dataset CSV")
    kind_option(sub)
    target_option(sub)
    seed_option(sub)
    param_option(sub)

    sub = command("predict", "predict QoR of feature rows")
    sub.add_argument("--model", action="append", required=True, help="model file, repeatable")
    sub.add_argument("--features", required=True, help="feature or dataset CSV")
    sub.add_argument("--xlsx", help="also write the predictions as a workbook")

    sub = command("eval", "evaluate models on a labeled dataset")
    sub.add_argument("--model", action="append", required=True, help="model file, repeatable")
    sub.add_argument("--dataset", required=True, help="dataset CSV")
    sub.add_argument("--xlsx", help="also write the report as a workbook")

    sub = command("sweep", "predict QoR of one design at several target frequencies")
    sub.add_argument("--model", action="append", required=True, help="model file, repeatable")
    sub.add_argument("--features", help="feature CSV, its first row is swept")
    sub.add_argument("--source", help="behavioral source, used with --ir instead of --features")
    sub.add_argument("--ir", help="textual LLVM IR, used instead of --features")
    sub.add_argument("--top", help="top function name for --ir")
    sub.add_argument("--freq-mhz", help="comma separated frequencies, config SWEEP_FREQUENCIES by default")
    sub.add_argument("--xlsx", help="also write the table as a workbook")

    sub = command("importance", "feature importance of a tree ensemble model")
    sub.add_argument("--model", required=True, help="model file")
    sub.add_argument("--xlsx", help="also write the report as a workbook")

    sub = command("synth-data", "generate a synthetic labeled dataset")
    sub.add_argument("--n", type=int, help="variants per design")
    seed_option(sub)
    sub.add_argument("--noise", type=float, help="multiplicative label noise level")
    sub.add_argument("--designs", type=int, help="number of designs")
    sub.add_argument("--device", help="device column")
    sub.add_argument("--latency-na", action="store_true", help="leave latency labels out")

    sub = command("compare", "compare model families on held-out variants")
    sub.add_argument("--dataset", required=True, help="dataset CSV")
    sub.add_argument(
        "--protocol",
        choices=[p.value for p in SplitProtocol],
        default=SplitProtocol.PER_DESIGN.value,
        help="models per design, per class of designs or one for all designs",
    )
    sub.add_argument("--classes", help="design,class CSV for the cluster protocol")
    target_option(sub, required=False)
    seed_option(sub)
    sub.add_argument("--xlsx", help="also write the table as a workbook")

    sub = command("curve", "learning curve of R squared against training fraction")
    sub.add_argument("--dataset", required=True, help="dataset CSV")
    kind_option(sub)
    target_option(sub)
    seed_option(sub)
    param_option(sub)
    sub.add_argument("--fractions", help="comma separated fractions, config CURVE_FRACTIONS by default")
    sub.add_argument("--xlsx", help="also write the curve as a workbook")

    sub = command("pareto", "variants with the best predicted latency/LUT trade-off")
    sub.add_argument("--model", action="append", required=True, help="latency and LUT model files")
    inputs = sub.add_mutually_exclusive_group(required=True)
    inputs.add_argument("--features", help="feature CSV of the candidate variants")
    inputs.add_argument("--dataset", help="labeled dataset CSV, also gives the actual front")
    sub.add_argument("--xlsx", help="also write the front as a workbook")
    return parser


class Runner:
    "Runs one parsed command line"

    def __init__(self, args: argparse.Namespace, config: configparser.ConfigParser) -> None:
        self.args = args
        self.config = config
        self.defaults = config["DEFAULT"]

    @property
    def seed(self) -> int:
        if getattr(self.args, "seed", None) is not None:
            return self.args.seed
        return int(self.defaults.get("seed", "42"))

    def hyperparams(self, kind: ModelKind) -> dict[str, Any]:
        "Config section of the model kind updated with --param overrides"
        result: dict[str, Any] = {}
        if self.config.has_section(kind.value):
            defaults = self.config.defaults()
            result = {
                k: v for k, v in self.config[kind.value].items() if k not in defaults
            }
        for item in getattr(self.args, "param", []):
            key, sep, value = item.partition("=")
            if not sep:
                raise UsageError(f"--param expects KEY=VALUE, got '{item}'")
            result[key.strip().lower()] = value.strip()
        return result

    def emit(self, text: str) -> None:
        "Writes command output to --out or standard output"
        if self.args.out:
            write_text(text, self.args.out)
        else:
            sys.stdout.write(text)

    def export(self, sheets: Sequence[tuple[ResultSheet, Sequence[ResultRow]]]) -> None:
        if not getattr(self.args, "xlsx", None):
            return
        with ResultWorkBook(self.args.xlsx) as workbook:
            for sheet, rows in sheets:
                workbook.add_rows(sheet, rows)
            workbook.save()

    def numbers(self, option: str, text: str) -> list[float]:
        "Comma separated numbers of an option or its config default"
        try:
            values = parse_number_list(text)
        except ValueError:
            raise UsageError(f"{option} expects comma separated numbers, got '{text}'") from None
        if not values or not all(math.isfinite(v) for v in values):
            raise UsageError(f"{option} expects comma separated numbers, got '{text}'")
        return values

    def models(self) -> list[TrainedModel]:
        paths = self.args.model if isinstance(self.args.model, list) else [self.args.model]
        return [deserialize(Path(path).read_bytes()) for path in paths]

    def models_by_target(self) -> dict[Target, TrainedModel]:
        "Models keyed by target, a later model of a target replaces an earlier one"
        models: dict[Target, TrainedModel] = {}
        for model in self.models():
            if model.target in models:
                logging.warning("second model of '%s' replaces the first one", model.target)
            models[model.target] = model
        return models

    def cmd_extract(self) -> None:
        args = self.args
        source = None
        if args.source:
            source = read_text(args.source)
        else:
            logging.warning("no behavioral source given, source features are set to 0")
        try:
            extraction = extract(
                source,
                read_text(args.ir),
                args.top,
                args.freq_mhz,
                args.source or "<source>",
                ErrorMessageConsoleHandler(),
            )
        except (MalformedPragma, ParseError, UnresolvedLabel, UnknownOpcode) as error:
            error.add_note(args.source if isinstance(error, MalformedPragma) else args.ir)
            raise
        logging.info(
            "slots per source: %s",
            ", ".join(f"{family} {len(names)}" for family, names in FAMILIES),
        )
        frame = features_frame([extraction.features])
        if args.design or args.variant or args.device:
            frame.insert(0, "design", args.design or args.top)
            frame.insert(1, "variant", args.variant or "")
            frame.insert(2, "device", args.device or self.defaults.get("device", ""))
        self.emit(frame.to_csv(index=False, lineterminator="\n"))
        if args.dump_graph:
            write_text(dump_graphs(extraction.cdfg, extraction.callgraph), args.dump_graph)

    def cmd_train(self) -> None:
        args = self.args
        if not args.out:
            raise UsageError("train needs --out for the model file")
        kind, target = ModelKind(args.kind), Target(args.target)
        dataset = load_csv(args.dataset)
        model = train(kind, dataset, target, self.hyperparams(kind), self.seed)
        Path(args.out).write_bytes(serialize(model))
        logging.info("model written to %s", args.out)
        sys.stdout.write(to_text(evaluate([model], dataset).rows()))

    def cmd_predict(self) -> None:
        rows = []
        features = load_features(self.args.features)
        for model in self.models():
            predictions = predict_many(model, [vector for _, vector in features])
            for (key, vector), prediction in zip(features, predictions):
                rows.append(
                    PredictionResultRow(key, vector.target_freq_mhz, model.target, prediction)
                )
        self.emit(raw_csv(rows))
        self.export([(ResultSheet.PREDICTIONS, rows)])

    def cmd_eval(self) -> None:
        report = evaluate(self.models(), load_csv(self.args.dataset))
        rows, design_rows = report.rows(), report.design_rows()
        if self.args.out:
            self.emit(to_sections([rows, design_rows]))
        else:
            self.emit(to_text(rows) + "\n" + to_text(design_rows))
        self.export([(ResultSheet.EVALUATION, rows), (ResultSheet.PER_DESIGN, design_rows)])

    def _sweep_base(self) -> FeatureVector:
        args = self.args
        if args.features:
            features = load_features(args.features)
            if not features:
                raise SchemaMismatch(f"{args.features}: no feature rows")
            return features[0][1]
        if not (args.ir and args.top):
            raise UsageError("sweep needs --features or --ir with --top")
        source = read_text(args.source) if args.source else None
        return extract(source, read_text(args.ir), args.top, 100.0).features

    def cmd_sweep(self) -> None:
        freqs = self.numbers(
            "--freq-mhz", self.args.freq_mhz or self.defaults.get("sweep_frequencies", "100")
        )
        rows = frequency_sweep(self.models_by_target(), self._sweep_base(), freqs)
        self.emit(to_csv(rows) if self.args.out else to_text(rows))
        self.export([(ResultSheet.SWEEP, rows)])

    def cmd_importance(self) -> None:
        report = importance_report(self.models()[0])
        slot_rows = [
            ImportanceResultRow(name, source, value)
            for (name, value), source in zip(report.per_slot, INPUT_SOURCES)
        ]
        source_rows = [SourceImportanceResultRow(s, report.source_total(s)) for s in FeatureSource]
        logging.info(
            "most important inputs: %s",
            ", ".join(f"{name} {value:.1f}" for name, value in report.ranked()[:5]),
        )
        self.emit(to_sections([slot_rows, source_rows]))
        self.export(
            [(ResultSheet.IMPORTANCE, slot_rows), (ResultSheet.SOURCE_IMPORTANCE, source_rows)]
        )

    def cmd_synth_data(self) -> None:
        args = self.args
        if not args.out:
            raise UsageError("synth-data needs --out for the dataset file")
        synthetic = self.config["synthetic"] if self.config.has_section("synthetic") else {}
        dataset = synthetic_generate(
            n=args.n if args.n is not None else int(synthetic.get("n", "400")),
            seed=self.seed,
            noise_level=args.noise if args.noise is not None else float(synthetic.get("noise", "0")),
            designs=args.designs if args.designs is not None else int(synthetic.get("designs", "1")),
            latency_na=args.latency_na,
            device=args.device or self.defaults.get("device", "zynq7000"),
        )
        save_csv(dataset, args.out)
        logging.info("%d synthetic records written to %s", len(dataset), args.out)

    def cmd_compare(self) -> None:
        args = self.args
        targets = [Target(args.target)] if args.target else list(Target)
        protocol = SplitProtocol(args.protocol)
        classes = load_design_classes(args.classes) if args.classes else None
        if args.classes and protocol is not SplitProtocol.CLUSTER:
            logging.warning("--classes is only used by the cluster protocol")
        elif protocol is SplitProtocol.CLUSTER and not classes:
            logging.warning("no design classes given, every design is a class of its own")
        fraction_key = (
            "unified_train_fraction" if protocol is SplitProtocol.UNIFIED else "train_fraction"
        )
        rows = model_comparison(
            load_csv(args.dataset),
            targets,
            self.seed,
            train_fraction=float(
                self.defaults.get(fraction_key, str(protocol.default_train_fraction))
            ),
            hyperparams={kind: self.hyperparams(kind) for kind in ModelKind},
            protocol=protocol,
            design_classes=classes,
        )
        self.emit(to_csv(rows) if args.out else to_text(rows))
        self.export([(ResultSheet.COMPARISON, rows)])

    def cmd_curve(self) -> None:
        kind = ModelKind(self.args.kind)
        fractions = self.numbers(
            "--fractions", self.args.fractions or self.defaults.get("curve_fractions", "0.3")
        )
        rows = learning_curve(
            load_csv(self.args.dataset),
            kind,
            Target(self.args.target),
            fractions,
            self.seed,
            self.hyperparams(kind),
            float(self.defaults.get("holdout_fraction", "0.25")),
        )
        self.emit(raw_csv(rows))
        self.export([(ResultSheet.LEARNING_CURVE, rows)])

    def cmd_pareto(self) -> None:
        args = self.args
        labels: dict[tuple[str, str, str], Labels] | None = None
        if args.dataset:
            dataset = load_csv(args.dataset)
            candidates = [(record.key, record.features) for record in dataset]
            labels = {record.key: record.labels for record in dataset}
        else:
            candidates = load_features(args.features)
        report = pareto_front(self.models_by_target(), candidates, labels)
        if report.actual_front is None:
            logging.info("%d of %d variants on the predicted front", len(report.rows), len(candidates))
        else:
            logging.info(
                "%d of %d variants on the predicted front, %d of the %d on the actual front found",
                len(report.rows), len(candidates), report.matched(), len(report.actual_front),
            )
        self.emit(to_csv(report.rows) if args.out else to_text(report.rows))
        self.export([(ResultSheet.PARETO, report.rows)])

    def run(self) -> None:
        match self.args.command:
            case "extract":
                self.cmd_extract()
            case "train":
                self.cmd_train()
            case "predict":
                self.cmd_predict()
            case "eval":
                self.cmd_eval()
            case "sweep":
                self.cmd_sweep()
            case "importance":
                self.cmd_importance()
            case "synth-data":
                self.cmd_synth_data()
            case "compare":
                self.cmd_compare()
            case "curve":
                self.cmd_curve()
            case "pareto":
                self.cmd_pareto()
            case _:
                raise NotImplementedError(self.args.command)


def run(argv: Sequence[str]) -> int:
    "Runs the command line, returns the exit code"
    try:
        args = build_parser().parse_args(argv)
    except UsageError:
        return EXIT_USAGE
    except SystemExit as exit_request:
        # --help
        return int(exit_request.code or 0)
    config = configparser.ConfigParser(inline_comment_prefixes="#")
    config.read(args.config)
    logging.basicConfig(
        level=config["DEFAULT"].get("loglevel", "INFO"),
        format=LOGFORMAT,
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    try:
        Runner(args, config).run()
    except UsageError as error:
        logging.error("%s", error)
        return EXIT_USAGE
    except (QorError, FileNotFoundError) as error:
        notes = getattr(error, "__notes__", [])
        logging.error("%s", ": ".join(notes + [str(error)]))
        return EXIT_DATA_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
