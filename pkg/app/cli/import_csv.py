"""
import-csv 子命令：CSV 行 → GWS1 数据集
"""

from app.cli.common import add_option, echo_config, output_file, require
from app.core.config import RunConfig
from app.core.exception import EXIT_OK
from app.crud.dataset_crud import dataset_crud
from app.schemas.signal_schema import SignalLabel


def add_parser(subparsers, parents):
    parser = subparsers.add_parser("import-csv", parents=parents, help="从 CSV 导入信号")
    add_option(parser, "--input", help="CSV 文件路径（每行一条信号）")
    add_option(parser, "--sample-rate", type=float, help="采样率（Hz）")
    add_option(parser, "--label", choices=[label.value for label in SignalLabel], help="应用到所有行的标签")
    parser.set_defaults(handler=cmd_import_csv)
    return parser


def cmd_import_csv(config: RunConfig) -> int:
    dataset = dataset_crud.import_csv(
        require(config.input, "--input", "import-csv"),
        sample_rate=config.sample_rate,
        label=SignalLabel(config.label),
    )
    path = output_file(config, "imported.gws")
    dataset_crud.save_dataset(dataset, path)
    echo_config(config, "import-csv", path.parent)
    print(f"导入完成: {path} ({len(dataset.signals)} 条信号, 长度 {dataset.n_samples}, 标签 {config.label})")
    return EXIT_OK
