"""A simulated hash-chained ledger with accounts, fees, and anchoring.

Append-only chain of blocks over a balance map. There is no consensus
and no mining: blocks are sealed on demand by a single writer, which is
all a desk-scale protocol simulation needs. Every transaction carries an
input-data field so arbitrary payloads (attestation tags in particular)
can be anchored via self-transactions and fetched back by hash later.

Currency is integer smallest units, 10**18 per ETH-equivalent; fees are
burned because there is no miner to pay, which keeps conservation exact:
sum of balances plus burned fees always equals the genesis total.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .errors import (
    ConfigurationError,
    FundsError,
    IntegrityError,
    NonceError,
    NotFinalError,
    NotFoundError,
    ParameterError,
    SerializationError,
)

WEI_PER_ETH = 10**18

_ZERO_HASH = b"\x00" * 32
_U64 = 2**64
_U128 = 2**128

DUMP_SCHEMA = "gazechain.ledger/1"


def eth_to_wei(text: str | Decimal) -> int:
    """Parse a decimal ETH amount into exact integer units (≤ 18 fractional digits)."""
    try:
        value = Decimal(text)
    except InvalidOperation as exc:
        raise ParameterError(f"not a decimal amount: {text!r}") from exc
    if not value.is_finite():
        raise ParameterError(f"not a finite amount: {text!r}")
    scaled = value.scaleb(18)
    if scaled != scaled.to_integral_value():
        raise ParameterError(f"more than 18 fractional digits: {text!r}")
    return int(scaled)


def wei_to_eth(amount: int) -> str:
    """Exact decimal string for an integer amount; round-trips through eth_to_wei."""
    sign = "-" if amount < 0 else ""
    whole, frac = divmod(abs(amount), WEI_PER_ETH)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:018d}".rstrip("0")


@dataclass(frozen=True, order=True)
class Address:
    """20-byte account identifier."""

    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != 20:
            raise ParameterError("address must be exactly 20 bytes")

    @property
    def hex(self) -> str:
        return "0x" + self.value.hex()

    @classmethod
    def from_seed(cls, seed: bytes | str) -> "Address":
        """Deterministic address for a named account seed."""
        if isinstance(seed, str):
            seed = seed.encode("utf-8")
        return cls(hashlib.sha3_256(seed).digest()[:20])

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        if text.startswith("0x") or text.startswith("0X"):
            text = text[2:]
        try:
            return cls(bytes.fromhex(text))
        except ValueError as exc:
            raise ParameterError(f"invalid address hex: {text!r}") from exc

    def __repr__(self) -> str:  # pragma: no cover - trivial
        return f"Address({self.hex})"


@dataclass(frozen=True)
class Transaction:
    """A transfer with fee, per-sender nonce, and free-form input data.

    A self-transaction (sender == recipient) is legal and is the vehicle
    for anchoring payloads. tx_hash commits to every other field.
    """

    sender: Address
    recipient: Address
    value: int
    fee: int
    nonce: int
    input_data: bytes
    tx_hash: bytes

    @staticmethod
    def encode_fields(
        sender: Address, recipient: Address, value: int, fee: int, nonce: int, input_data: bytes
    ) -> bytes:
        if not 0 <= value < _U128:
            raise ParameterError(f"value out of range: {value}")
        if not 0 <= fee < _U128:
            raise ParameterError(f"fee out of range: {fee}")
        if not 0 <= nonce < _U64:
            raise ParameterError(f"nonce out of range: {nonce}")
        if len(input_data) > 0xFFFFFFFF:
            raise ParameterError("input_data too long")
        return b"".join(
            (
                sender.value,
                recipient.value,
                value.to_bytes(16, "little"),
                fee.to_bytes(16, "little"),
                struct.pack("<Q", nonce),
                struct.pack("<I", len(input_data)),
                input_data,
            )
        )

    @classmethod
    def build(
        cls,
        sender: Address,
        recipient: Address,
        value: int,
        fee: int,
        nonce: int,
        input_data: bytes = b"",
    ) -> "Transaction":
        digest = hashlib.sha3_256(
            cls.encode_fields(sender, recipient, value, fee, nonce, input_data)
        ).digest()
        return cls(sender, recipient, value, fee, nonce, input_data, digest)

    def recompute_hash(self) -> bytes:
        return hashlib.sha3_256(
            self.encode_fields(
                self.sender, self.recipient, self.value, self.fee, self.nonce, self.input_data
            )
        ).digest()


@dataclass(frozen=True)
class Block:
    """Index, simulated timestamp, parent hash, and the sealed transactions."""

    index: int
    timestamp: int
    prev_hash: bytes
    transactions: tuple[Transaction, ...]
    block_hash: bytes

    @staticmethod
    def compute_hash(
        index: int, timestamp: int, prev_hash: bytes, tx_hashes: tuple[bytes, ...]
    ) -> bytes:
        header = struct.pack("<QQ", index, timestamp) + prev_hash + struct.pack("<I", len(tx_hashes))
        return hashlib.sha3_256(header + b"".join(tx_hashes)).digest()

    @classmethod
    def build(
        cls, index: int, timestamp: int, prev_hash: bytes, transactions: tuple[Transaction, ...]
    ) -> "Block":
        digest = cls.compute_hash(
            index, timestamp, prev_hash, tuple(tx.tx_hash for tx in transactions)
        )
        return cls(index, timestamp, prev_hash, transactions, digest)


class Ledger:
    """Single-writer chain state: blocks, balances, mempool, nonces.

    All mutation goes through submit_transaction / seal_block on one
    thread; sealed history is immutable value data and safe to read from
    anywhere.
    """

    def __init__(self, allocations: list[tuple[Address, int]] | None = None):
        allocations = list(allocations or [])
        seen: set[Address] = set()
        for addr, amount in allocations:
            if addr in seen:
                raise ConfigurationError(f"duplicate genesis address {addr.hex}")
            if amount < 0:
                raise ConfigurationError("genesis amounts must be non-negative")
            seen.add(addr)
        self.genesis_allocations: dict[Address, int] = {a: v for a, v in allocations}
        self.balances: dict[Address, int] = dict(self.genesis_allocations)
        self.next_nonce: dict[Address, int] = {}
        self.pending: list[Transaction] = []
        self.fees_burned = 0
        self.clock = 0
        self.chain: list[Block] = [Block.build(0, 0, _ZERO_HASH, ())]
        # Balances as they will stand once pending seals; submission checks
        # against this so seal_block can never fail.
        self._available: dict[Address, int] = dict(self.balances)
        self._tx_index: dict[bytes, tuple[int, int]] = {}

    @classmethod
    def genesis(cls, allocations: list[tuple[Address, int]]) -> "Ledger":
        return cls(allocations)

    def balance_of(self, addr: Address) -> int:
        return self.balances.get(addr, 0)

    def nonce_of(self, addr: Address) -> int:
        return self.next_nonce.get(addr, 0)

    def submit_transaction(self, tx: Transaction) -> bytes:
        """Validate and queue a transaction; returns its hash. No balances move yet."""
        if tx.recompute_hash() != tx.tx_hash:
            raise IntegrityError("transaction hash does not match its contents")
        expected_nonce = self.next_nonce.get(tx.sender, 0)
        if tx.nonce != expected_nonce:
            raise NonceError(f"nonce {tx.nonce} != expected {expected_nonce} for {tx.sender.hex}")
        if self._available.get(tx.sender, 0) < tx.value + tx.fee:
            raise FundsError(
                f"{tx.sender.hex} has {self._available.get(tx.sender, 0)}, "
                f"needs {tx.value + tx.fee}"
            )
        self._available[tx.sender] = self._available.get(tx.sender, 0) - tx.value - tx.fee
        self._available[tx.recipient] = self._available.get(tx.recipient, 0) + tx.value
        self.next_nonce[tx.sender] = expected_nonce + 1
        self.pending.append(tx)
        return tx.tx_hash

    def transfer(
        self,
        sender: Address,
        recipient: Address,
        value: int,
        fee: int,
        input_data: bytes = b"",
    ) -> bytes:
        """Build a transaction with the sender's next nonce and submit it."""
        tx = Transaction.build(
            sender, recipient, value, fee, self.next_nonce.get(sender, 0), input_data
        )
        return self.submit_transaction(tx)

    def seal_block(self) -> Block:
        """Apply all pending transactions in submission order and append a block."""
        for tx in self.pending:
            self.balances[tx.sender] = self.balances.get(tx.sender, 0) - tx.value - tx.fee
            self.balances[tx.recipient] = self.balances.get(tx.recipient, 0) + tx.value
            self.fees_burned += tx.fee
        self.clock += 1
        block = Block.build(
            index=len(self.chain),
            timestamp=self.clock,
            prev_hash=self.chain[-1].block_hash,
            transactions=tuple(self.pending),
        )
        for pos, tx in enumerate(block.transactions):
            self._tx_index[tx.tx_hash] = (block.index, pos)
        self.chain.append(block)
        self.pending = []
        return block

    def get_transaction(self, tx_hash: bytes) -> Transaction:
        """Fetch a sealed transaction by hash, input data included."""
        loc = self._tx_index.get(tx_hash)
        if loc is not None:
            block_idx, pos = loc
            return self.chain[block_idx].transactions[pos]
        if any(tx.tx_hash == tx_hash for tx in self.pending):
            raise NotFinalError(f"transaction {tx_hash.hex()} is pending, not sealed")
        raise NotFoundError(f"no transaction {tx_hash.hex()}")

    def verify_chain(self) -> bool:
        """Recompute every transaction hash, block hash, and parent link."""
        prev = _ZERO_HASH
        for position, block in enumerate(self.chain):
            if block.index != position or block.prev_hash != prev:
                return False
            for tx in block.transactions:
                try:
                    if tx.recompute_hash() != tx.tx_hash:
                        return False
                except ParameterError:
                    return False
            recomputed = Block.compute_hash(
                block.index,
                block.timestamp,
                block.prev_hash,
                tuple(tx.tx_hash for tx in block.transactions),
            )
            if recomputed != block.block_hash:
                return False
            prev = block.block_hash
        return True

    def conservation_holds(self) -> bool:
        """Exact conservation: balances plus burned fees equal the genesis total."""
        return sum(self.balances.values()) + self.fees_burned == sum(
            self.genesis_allocations.values()
        )

    def replay_balances(self) -> dict[Address, int]:
        """Recompute balances from genesis allocations and the sealed chain."""
        balances = dict(self.genesis_allocations)
        for block in self.chain:
            for tx in block.transactions:
                balances[tx.sender] = balances.get(tx.sender, 0) - tx.value - tx.fee
                balances[tx.recipient] = balances.get(tx.recipient, 0) + tx.value
        return balances

    # -- dump format ----------------------------------------------------

    def to_dump(self) -> str:
        """Deterministic structured-text export of the full chain and state."""

        def tx_obj(tx: Transaction) -> dict:
            return {
                "from": tx.sender.hex,
                "to": tx.recipient.hex,
                "value": tx.value,
                "fee": tx.fee,
                "nonce": tx.nonce,
                "input_data": tx.input_data.hex(),
                "tx_hash": tx.tx_hash.hex(),
            }

        doc = {
            "schema": DUMP_SCHEMA,
            "clock": self.clock,
            "fees_burned": self.fees_burned,
            "genesis_allocations": {a.hex: v for a, v in self.genesis_allocations.items()},
            "balances": {a.hex: v for a, v in self.balances.items()},
            "nonces": {a.hex: v for a, v in self.next_nonce.items()},
            "pending": [tx_obj(tx) for tx in self.pending],
            "blocks": [
                {
                    "index": b.index,
                    "timestamp": b.timestamp,
                    "prev_hash": b.prev_hash.hex(),
                    "block_hash": b.block_hash.hex(),
                    "transactions": [tx_obj(tx) for tx in b.transactions],
                }
                for b in self.chain
            ],
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dump(cls, text: str) -> "Ledger":
        """Reconstruct a ledger from a dump without re-deriving any hash.

        Stored hashes are taken verbatim so verify_chain can be used to
        audit a dump that may have been tampered with.
        """
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SerializationError(f"dump is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("schema") != DUMP_SCHEMA:
            raise SerializationError("dump schema marker missing or unsupported")

        def parse_tx(obj: dict) -> Transaction:
            try:
                return Transaction(
                    sender=Address.from_hex(obj["from"]),
                    recipient=Address.from_hex(obj["to"]),
                    value=int(obj["value"]),
                    fee=int(obj["fee"]),
                    nonce=int(obj["nonce"]),
                    input_data=bytes.fromhex(obj["input_data"]),
                    tx_hash=bytes.fromhex(obj["tx_hash"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise SerializationError(f"malformed transaction in dump: {exc}") from exc

        ledger = cls.__new__(cls)
        try:
            ledger.genesis_allocations = {
                Address.from_hex(a): int(v) for a, v in doc["genesis_allocations"].items()
            }
            ledger.balances = {Address.from_hex(a): int(v) for a, v in doc["balances"].items()}
            ledger.next_nonce = {Address.from_hex(a): int(v) for a, v in doc["nonces"].items()}
            ledger.fees_burned = int(doc["fees_burned"])
            ledger.clock = int(doc["clock"])
            ledger.pending = [parse_tx(o) for o in doc["pending"]]
            ledger.chain = [
                Block(
                    index=int(b["index"]),
                    timestamp=int(b["timestamp"]),
                    prev_hash=bytes.fromhex(b["prev_hash"]),
                    transactions=tuple(parse_tx(o) for o in b["transactions"]),
                    block_hash=bytes.fromhex(b["block_hash"]),
                )
                for b in doc["blocks"]
            ]
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise SerializationError(f"malformed dump: {exc}") from exc

        ledger._available = dict(ledger.balances)
        for tx in ledger.pending:
            ledger._available[tx.sender] = ledger._available.get(tx.sender, 0) - tx.value - tx.fee
            ledger._available[tx.recipient] = ledger._available.get(tx.recipient, 0) + tx.value
        ledger._tx_index = {}
        for list_pos, block in enumerate(ledger.chain):
            for pos, tx in enumerate(block.transactions):
                ledger._tx_index[tx.tx_hash] = (list_pos, pos)
        return ledger
