"""
JSON model files.

    {
      "states": ["a", "b"],
      "transitions": [{"from": "a", "to": "b", "prob": "1"}, ...],
      "rewards": [{"from": "a", "to": "b", "cost": "1/2"}, ...]
    }

`prob` and `cost` are decimal ("0.01", "1e-3") or rational ("16/65024")
strings; JSON integers are accepted too. Every (from, to) pair may appear at
most once per list. The full grammar is in docs/model-format.md.
"""
import json
from pathlib import Path
from typing import Dict, FrozenSet, Optional, Tuple, Union

from pydantic import ValidationError

from app.markov.chain import MarkovChain, RewardChain, validate_chain, validate_reward
from app.markov.errors import ModelFileError, ModelParseError
from app.markov.scalar import Arithmetic, Scalar, format_scalar, parse_scalar
from app.schemas import ModelFile

ALL = "ALL"
UNTIL_SEPARATOR = "=>"


def read_model_file(path: Union[str, Path]) -> ModelFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_model_file(data)


def parse_model_file(data) -> ModelFile:
    if isinstance(data, ModelFile):
        return data
    try:
        return ModelFile.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise ModelParseError(f"{where}: {first['msg']}") from None


def _edge_table(entries, attribute: str, kind: str, mode: Arithmetic) -> Dict[Tuple[str, str], Scalar]:
    table: Dict[Tuple[str, str], Scalar] = {}
    for entry in entries:
        key = (entry.from_, entry.to)
        if key in table:
            raise ModelParseError(f"duplicate {kind} {entry.from_!r} -> {entry.to!r}")
        table[key] = parse_scalar(getattr(entry, attribute), mode)
    return table


def raw_row_sums(model: ModelFile, mode: Arithmetic = Arithmetic.EXACT) -> Dict[str, Scalar]:
    """Per-state sums of the declared probabilities, before any validation."""
    sums: Dict[str, Scalar] = {label: parse_scalar(0, mode) for label in model.states}
    for (source, _), value in _edge_table(model.transitions, "prob", "transition", mode).items():
        if source in sums:
            sums[source] += value
    return sums


def build_model(model: ModelFile, mode: Arithmetic = Arithmetic.EXACT) -> Tuple[MarkovChain, Optional[RewardChain]]:
    trans = _edge_table(model.transitions, "prob", "transition", mode)
    chain = validate_chain(model.states, trans, mode)
    if not model.rewards:
        return chain, None
    costs = _edge_table(model.rewards, "cost", "reward", mode)
    return chain, validate_reward(chain, costs)


def load_model(path: Union[str, Path], mode: Arithmetic = Arithmetic.EXACT) -> Tuple[MarkovChain, Optional[RewardChain]]:
    return build_model(read_model_file(path), mode)


def dump_model(chain: MarkovChain, rchain: Optional[RewardChain] = None) -> dict:
    data = {
        "states": list(chain.states),
        "transitions": [
            {"from": s, "to": t, "prob": format_scalar(v)} for s, t, v in chain.edges()
        ],
    }
    if rchain is not None:
        data["rewards"] = [
            {"from": chain.states[i], "to": chain.states[j], "cost": format_scalar(v)}
            for (i, j), v in sorted(rchain.costs.items())
        ]
    return data


def parse_state_set(text: str, chain: MarkovChain) -> FrozenSet[str]:
    """`ALL`, an empty string, or comma-separated state labels."""
    text = text.strip()
    if text == ALL:
        return frozenset(chain.states)
    labels = frozenset(part.strip() for part in text.split(",") if part.strip())
    for label in labels:
        chain.index(label)
    return labels


def parse_until(text: str, chain: MarkovChain) -> Tuple[FrozenSet[str], FrozenSet[str]]:
    if UNTIL_SEPARATOR not in text:
        raise ModelParseError(f"until query {text!r} must look like PHI=>PSI")
    phi, psi = text.split(UNTIL_SEPARATOR, 1)
    return parse_state_set(phi, chain), parse_state_set(psi, chain)
