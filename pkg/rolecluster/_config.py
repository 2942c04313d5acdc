import os
import toml
from dacite import from_dict
from dataclasses import field
from dataclasses import dataclass
from typing import List
from typing import Optional

from rolecluster._exceptions import InputError

INPUT_FORMATS = ("wide", "long")
EMIT_KINDS = ("json", "csv", "newick", "dot")
LINKAGES = ("average", "single", "complete")
LOG_BASE = 2


@dataclass
class AnalysisConfig:
    """
    Settings for one analysis run.
    """
    inputs: List[str] = field(default_factory=list)
    input_format: str = "wide"
    map_filter: Optional[str] = None
    k: Optional[int] = None
    log_base: int = LOG_BASE
    out_dir: str = "out"
    emit: List[str] = field(default_factory=lambda: list(EMIT_KINDS))
    strictness: str = "strict"
    label: Optional[str] = None
    sqrt_jsd: bool = False
    linkage: str = "average"
    workers: int = 1
    log_file: Optional[str] = None
    over_write: bool = True

    @property
    def lenient(self) -> bool:
        return self.strictness == "lenient"

    def validate(self) -> "AnalysisConfig":
        """
        Check option values that do not depend on the data.

        The upper bound of ``k`` (m - 1) is only known after ingest and is
        checked by the pipeline.

        :return: self, for chaining.
        :rtype: AnalysisConfig

        :raises InputError: On any invalid option.
        """
        if self.input_format not in INPUT_FORMATS:
            raise InputError(
                f"Unknown input format '{self.input_format}', "
                f"expected one of {INPUT_FORMATS}.")
        unknown = sorted(set(self.emit) - set(EMIT_KINDS))
        if unknown:
            raise InputError(
                f"Unknown output formats {unknown}, "
                f"expected a subset of {EMIT_KINDS}.")
        if self.linkage not in LINKAGES:
            raise InputError(f"Unknown linkage '{self.linkage}'.")
        if self.strictness not in ("strict", "lenient"):
            raise InputError(f"Unknown strictness '{self.strictness}'.")
        if self.log_base != LOG_BASE:
            raise InputError(
                f"Log base is fixed at {LOG_BASE}, got {self.log_base}.")
        if self.k is not None and self.k < 2:
            raise InputError(f"k must be at least 2, got {self.k}.")
        if self.workers < 1:
            raise InputError(f"workers must be positive, got {self.workers}.")
        return self


class Config:
    """
    Analysis settings loaded from a TOML file.

    :param config_file: Path to the settings file, defaults to the packaged
        ``config/config.toml``.
    :type config_file: Optional[str]

    :raises InputError: If the file cannot be read or does not convert to
        :class:`AnalysisConfig`.
    """

    def __init__(self, config_file: Optional[str] = None):
        self._config_file = config_file or os.path.join(
            os.path.dirname(os.path.abspath(__file__)),
            "config/config.toml"
        )
        self._settings = self._load(self._config_file)

    @property
    def settings(self) -> AnalysisConfig:
        """
        Getter for self._settings.
        :return: AnalysisConfig.
        """
        return self._settings

    @property
    def config_file(self) -> str:
        return self._config_file

    @staticmethod
    def _load(filename: str) -> AnalysisConfig:
        try:
            data = dict(toml.load(filename))
        except (OSError, toml.TomlDecodeError) as e:
            raise InputError(f"Cannot read config file {filename}: {e}")
        try:
            return from_dict(data_class=AnalysisConfig, data=data)
        except Exception as e:
            raise InputError(f"Invalid config file {filename}: {e}")
