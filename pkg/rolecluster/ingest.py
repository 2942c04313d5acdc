"""
Read team-composition records and turn them into canonical compositions.

Two physical layouts are accepted:

* **wide**: one row per team composition, agents in ``agent_1`` ..
  ``agent_5`` (or a single ``agents`` column joined with ``|``).
* **long**: one row per agent; rows sharing the metadata columns and a
  ``composition_key`` form one composition.
"""
import io
import os
import re
import logging
import pandas as pd
from dataclasses import field
from dataclasses import dataclass
from typing import IO
from typing import Dict
from typing import List
from typing import Tuple
from typing import Union
from typing import Iterable
from typing import Optional
from typing import Sequence

from rolecluster._exceptions import InputError
from rolecluster._exceptions import ParseError
from rolecluster._exceptions import ValidationError

logger = logging.getLogger(__name__)

TEAM_SIZE = 5
META_COLUMNS = ("tournament", "stage", "match_type", "map", "team")
WIDE_AGENT_COLUMNS = tuple(f"agent_{i}" for i in range(1, TEAM_SIZE + 1))
WIDE_COLUMNS = META_COLUMNS + WIDE_AGENT_COLUMNS + (
    "wins", "losses", "maps_played")
COLUMN_ALIASES = {
    "total_wins_by_map": "wins",
    "wins_by_map": "wins",
    "total_loss_by_map": "losses",
    "losses_by_map": "losses",
    "total_maps_played": "maps_played",
    "match_name": "match_type",
}

_BAD_LINE = "\x00bad-line"

Source = Union[str, os.PathLike, IO[str]]


@dataclass(frozen=True)
class RawRecord:
    """
    One team-composition entry as read from the source.
    """
    tournament: str
    stage: str
    match_type: str
    map: str
    team: str
    agents: Tuple[str, ...]
    wins_by_map: int
    losses_by_map: int
    maps_played: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class TeamComposition:
    """
    Exactly five distinct agents fielded by one team on one map instance.
    Agents are kept sorted.
    """
    composition_id: str
    map: str
    team: str
    agents: Tuple[str, ...]
    tournament: str = ""
    stage: str = ""
    match_type: str = ""

    def __post_init__(self):
        agents = tuple(sorted(self.agents))
        if len(agents) != TEAM_SIZE or len(set(agents)) != TEAM_SIZE:
            raise ValueError(
                f"A composition needs {TEAM_SIZE} distinct agents, "
                f"got {list(self.agents)}.")
        object.__setattr__(self, "agents", agents)


@dataclass(frozen=True)
class Roster:
    """
    Sorted list of unique agent names with a name to position index.
    """
    agents: Tuple[str, ...]
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        agents = tuple(self.agents)
        if list(agents) != sorted(set(agents)):
            raise ValueError("Roster names must be unique and sorted.")
        object.__setattr__(self, "agents", agents)
        object.__setattr__(
            self, "index", {name: i for i, name in enumerate(agents)})

    def __len__(self) -> int:
        return len(self.agents)

    def __iter__(self):
        return iter(self.agents)

    def __contains__(self, name) -> bool:
        return name in self.index

    def position(self, name: str) -> int:
        return self.index[name]

    def name(self, position: int) -> str:
        return self.agents[position]


@dataclass
class DataQuality:
    """
    Counters collected while reading and filtering.
    """
    rows_read: int = 0
    records_parsed: int = 0
    bad_lines: List[int] = field(default_factory=list)
    skipped_groups: List[str] = field(default_factory=list)
    blank_map_records: int = 0
    dropped_by_filter: int = 0

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "records_parsed": self.records_parsed,
            "bad_lines": list(self.bad_lines),
            "skipped_groups": list(self.skipped_groups),
            "blank_map_records": self.blank_map_records,
            "dropped_by_filter": self.dropped_by_filter,
        }


def normalize_agent_name(name: str) -> Tuple[str, str]:
    """
    Split an agent name into a matching key and a display form.

    The key is case-folded with everything but letters and digits removed,
    so "KAY/O", "Kay/o" and "Kayo" match. The display form is the trimmed
    input.

    :param name: Raw agent name.
    :type name: str

    :return: (key, display)
    :rtype: Tuple[str, str]
    """
    display = name.strip()
    key = re.sub(r"[\W_]+", "", display.casefold())
    return key, display


class AgentNames:
    """
    Maps spellings of the same agent onto the first spelling seen.
    """

    def __init__(self):
        self._display: Dict[str, str] = {}

    def canonical(self, name: str) -> str:
        key, display = normalize_agent_name(name)
        if not key:
            raise ValueError(f"Blank agent name {name!r}.")
        return self._display.setdefault(key, display)


def _read_text(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, "r", encoding="utf-8", newline="") as f:
                return f.read()
        except (OSError, UnicodeDecodeError) as e:
            raise InputError(f"Cannot read {source}: {e}")
    return source.read()


def _normalize_column(name: str) -> str:
    column = re.sub(r"\s+", "_", str(name).strip().lower())
    return COLUMN_ALIASES.get(column, column)


def _parse_count(value: str, column: str, line: int, minimum: int) -> int:
    text = value.strip()
    if not text and column != "maps_played":
        return 0
    try:
        count = int(text)
    except ValueError:
        raise ParseError(
            f"column '{column}' is not an integer: {value!r}", line=line)
    if count < minimum:
        raise ValidationError(
            f"column '{column}' must be at least {minimum}, got {count}",
            group=f"line {line}")
    return count


def _check_agents(agents: Sequence[str], group: str) -> None:
    if len(agents) != TEAM_SIZE:
        raise ValidationError(
            f"expected {TEAM_SIZE} agents, got {len(agents)}: "
            f"{list(agents)}", group=group)
    if len(set(agents)) != TEAM_SIZE:
        duplicates = sorted({a for a in agents if list(agents).count(a) > 1})
        raise ValidationError(
            f"duplicate agent(s) {duplicates}", group=group)


def _load_frame(text: str, lenient: bool,
                quality: DataQuality) -> pd.DataFrame:
    header = text.split("\n", 1)[0]
    sep = "\t" if "\t" in header else ","

    def skip_bad_line(bad_line: List[str]) -> List[str]:
        return [_BAD_LINE]

    try:
        df = pd.read_csv(
            io.StringIO(text),
            sep=sep,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            engine="python",
            on_bad_lines=skip_bad_line if lenient else "error",
        )
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise ParseError(str(e).strip(),
                         line=int(match.group(1)) if match else None)

    if not isinstance(df.index, pd.RangeIndex):
        # An over-long first data row is read as an implicit index column.
        message = f"Expected {len(df.columns)} fields in line 2, saw more"
        if not lenient:
            raise ParseError(message, line=2)
        logger.warning("Skipping malformed line 2")
        quality.bad_lines.append(2)
        header, _, rest = text.partition("\n")
        _, _, rest = rest.partition("\n")
        return _load_frame(f"{header}\n\n{rest}", lenient, quality)

    df.columns = [_normalize_column(c) for c in df.columns]
    df = df.fillna("")
    df.index = df.index + 2

    bad = df[df.iloc[:, 0] == _BAD_LINE].index
    for line in bad:
        logger.warning(f"Skipping malformed line {line}")
    quality.bad_lines.extend(int(line) for line in bad)
    df = df.drop(index=bad)

    blank = df.apply(lambda column: column.str.strip() == "").all(axis=1)
    df = df[~blank]
    quality.rows_read += len(df)
    return df


def _require(df: pd.DataFrame, columns: Iterable[str]) -> None:
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ParseError(f"missing column(s) {missing}", line=1)


def _record(row: pd.Series, agents: Tuple[str, ...], line: int) -> RawRecord:
    def text(column: str) -> str:
        return row.get(column, "").strip()

    return RawRecord(
        tournament=text("tournament"),
        stage=text("stage"),
        match_type=text("match_type"),
        map=text("map"),
        team=text("team"),
        agents=agents,
        wins_by_map=_parse_count(row.get("wins", ""), "wins", line, 0),
        losses_by_map=_parse_count(row.get("losses", ""), "losses", line, 0),
        maps_played=_parse_count(
            row.get("maps_played", ""), "maps_played", line, 1),
        line=line,
    )


def _skip_or_raise(error: InputError, lenient: bool,
                   quality: DataQuality) -> None:
    if not lenient:
        raise error
    logger.warning(f"Skipping {error}")
    quality.skipped_groups.append(str(error))


def _parse_wide(df: pd.DataFrame, names: AgentNames, lenient: bool,
                quality: DataQuality) -> List[RawRecord]:
    _require(df, META_COLUMNS + ("maps_played",))
    joined = "agents" in df.columns
    if not joined:
        _require(df, WIDE_AGENT_COLUMNS)

    records = []
    for line, row in df.iterrows():
        try:
            if joined:
                raw = [a for a in row["agents"].split("|") if a.strip()]
            else:
                raw = [row[c] for c in WIDE_AGENT_COLUMNS if row[c].strip()]
            agents = tuple(names.canonical(a) for a in raw)
            _check_agents(agents, group=f"line {line}")
            records.append(_record(row, agents, int(line)))
        except InputError as e:
            _skip_or_raise(e, lenient, quality)
    return records


def _parse_long(df: pd.DataFrame, names: AgentNames, lenient: bool,
                quality: DataQuality) -> List[RawRecord]:
    key_columns = list(META_COLUMNS) + ["composition_key"]
    _require(df, key_columns + ["agent", "maps_played"])

    records = []
    for key, group in df.groupby(key_columns, sort=False):
        label = "/".join(str(k) for k in key)
        first = int(group.index[0])
        try:
            agents = tuple(names.canonical(a)
                           for a in group["agent"] if a.strip())
            _check_agents(agents, group=label)
            for column in ("wins", "losses", "maps_played"):
                if column in group and group[column].nunique() > 1:
                    raise ValidationError(
                        f"inconsistent '{column}' values "
                        f"{sorted(group[column].unique())}", group=label)
            records.append(_record(group.iloc[0], agents, first))
        except InputError as e:
            _skip_or_raise(e, lenient, quality)
    return records


def parse_records(
        source: Source,
        fmt: str = "wide",
        lenient: bool = False,
        quality: Optional[DataQuality] = None,
        names: Optional[AgentNames] = None,
) -> List[RawRecord]:
    """
    Parse delimited text into raw composition records.

    Comma is the default delimiter; a tab in the header row switches to tab
    separated input. An empty source yields no records.

    :param source: Path to a UTF-8 file or an open text stream.
    :type source: Union[str, os.PathLike, IO[str]]

    :param fmt: "wide" or "long".
    :type fmt: str

    :param lenient: Skip and log invalid groups and malformed lines instead
        of raising.
    :type lenient: bool

    :param quality: Optional counters to fill.
    :type quality: Optional[DataQuality]

    :param names: Agent name canonicalizer shared between several sources.
    :type names: Optional[AgentNames]

    :return: One record per team composition entry, in source order.
    :rtype: List[RawRecord]

    :raises ParseError: Malformed row, missing column or non-integer count.
    :raises ValidationError: Group without exactly 5 distinct agents, or
        maps_played below 1.
    """
    if fmt not in ("wide", "long"):
        raise InputError(f"Unknown input format '{fmt}'.")
    quality = quality if quality is not None else DataQuality()
    names = names if names is not None else AgentNames()

    text = _read_text(source)
    if not text.strip():
        return []

    df = _load_frame(text, lenient, quality)
    if fmt == "wide":
        records = _parse_wide(df, names, lenient, quality)
    else:
        records = _parse_long(df, names, lenient, quality)

    quality.records_parsed += len(records)
    return records


def read_records(
        paths: Sequence[Union[str, os.PathLike]],
        fmt: str = "wide",
        lenient: bool = False,
        quality: Optional[DataQuality] = None,
        names: Optional[AgentNames] = None,
) -> List[RawRecord]:
    """
    Parse several files and concatenate their records. Agent spellings are
    unified across files, and across calls when ``names`` is shared.
    """
    names = names if names is not None else AgentNames()
    records = []
    for path in paths:
        logger.info(f"Reading {path} ({fmt})")
        records.extend(parse_records(path, fmt, lenient, quality, names))
    return records


def expand_and_filter(
        records: Sequence[RawRecord],
        map_filter: Optional[str] = None,
        quality: Optional[DataQuality] = None,
) -> List[TeamComposition]:
    """
    Expand every record into ``maps_played`` compositions, keeping only the
    requested map.

    Map names match case-insensitively. Records with a blank map are kept
    when no filter is set and dropped otherwise.

    :param records: Validated records.
    :type records: Sequence[RawRecord]

    :param map_filter: Map to keep, or None for all maps.
    :type map_filter: Optional[str]

    :param quality: Optional counters to fill.
    :type quality: Optional[DataQuality]

    :return: Compositions in record order.
    :rtype: List[TeamComposition]
    """
    wanted = map_filter.strip().casefold() if map_filter else None
    comps = []
    for i, record in enumerate(records):
        if not record.map:
            if quality is not None:
                quality.blank_map_records += 1
        if wanted is not None and record.map.casefold() != wanted:
            if quality is not None:
                quality.dropped_by_filter += 1
            continue
        for j in range(record.maps_played):
            comps.append(TeamComposition(
                composition_id=f"{i}.{j}",
                map=record.map,
                team=record.team,
                agents=record.agents,
                tournament=record.tournament,
                stage=record.stage,
                match_type=record.match_type,
            ))
    return comps


def build_roster(comps: Sequence[TeamComposition]) -> Roster:
    """
    Every agent appearing in any composition, sorted.

    :raises InputError: When ``comps`` is empty.
    """
    if not comps:
        raise InputError("no compositions after filtering")
    return Roster(tuple(sorted({a for c in comps for a in c.agents})))


def _write_rows(rows: List[list], dest: Source) -> None:
    df = pd.DataFrame(rows, columns=list(WIDE_COLUMNS))
    df.to_csv(dest, index=False, lineterminator="\n")


def write_records(records: Sequence[RawRecord], dest: Source) -> None:
    """
    Write records as wide CSV; parsing the result gives back equal records.
    """
    _write_rows([
        [r.tournament, r.stage, r.match_type, r.map, r.team, *r.agents,
         r.wins_by_map, r.losses_by_map, r.maps_played]
        for r in records
    ], dest)


def write_compositions(comps: Sequence[TeamComposition],
                       dest: Source) -> None:
    """
    Write compositions as wide CSV, one row each with ``maps_played`` = 1.
    """
    _write_rows([
        [c.tournament, c.stage, c.match_type, c.map, c.team, *c.agents,
         0, 0, 1]
        for c in comps
    ], dest)
