"""Double-stake escrow between a subject and a data collector.

State machine: Created -> Locked -> Complete, with Created -> Aborted as
the only exit before the collector joins. Terminal states absorb. The
subject stakes twice the compensation X at creation; the collector
matches it to lock; on the collector's confirmation the contract pays
3X back to the subject and X to the collector, so each honest party
nets exactly +/-X. There is deliberately no refund path out of Locked:
a deviating party strands both stakes, which is the incentive the
whole exchange rests on.

Fee model: every operation is one fee-bearing call transaction from its
caller; transfers initiated by the contract itself carry no fee. An
honest run therefore costs each party exactly two fees.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from .errors import AuthorizationError, ParameterError, StateError
from .ledger import Address, Ledger


class EscrowState(enum.Enum):
    CREATED = "created"
    LOCKED = "locked"
    COMPLETE = "complete"
    ABORTED = "aborted"


@dataclass
class EscrowContract:
    contract_addr: Address
    subject: Address
    compensation_x: int
    state: EscrowState
    collector: Address | None = None
    staked_subject: int = 0
    staked_collector: int = 0

    def custody_balance(self, ledger: Ledger) -> int:
        return ledger.balance_of(self.contract_addr)


def _contract_address(subject: Address, creation_nonce: int) -> Address:
    return Address.from_seed(b"escrow:" + subject.value + struct.pack("<Q", creation_nonce))


def create(ledger: Ledger, subject: Address, stake: int, fee: int) -> EscrowContract:
    """Subject initiates the contract, staking double the compensation.

    The stake must be even: compensation is defined as exactly half of
    it and the currency is integral.
    """
    if stake <= 0:
        raise ParameterError("stake must be positive")
    if stake % 2 != 0:
        raise ParameterError("stake must be even so compensation is exactly half")
    contract_addr = _contract_address(subject, ledger.nonce_of(subject))
    ledger.transfer(subject, contract_addr, stake, fee)
    return EscrowContract(
        contract_addr=contract_addr,
        subject=subject,
        compensation_x=stake // 2,
        state=EscrowState.CREATED,
        staked_subject=stake,
    )


def confirm_collect(
    ledger: Ledger, contract: EscrowContract, collector: Address, stake: int, fee: int
) -> EscrowContract:
    """Collector commits to the collection by matching the subject's stake."""
    if contract.state is not EscrowState.CREATED:
        raise StateError(f"cannot confirm collection from {contract.state.value}")
    if stake != 2 * contract.compensation_x:
        raise ParameterError(
            f"collector must stake exactly {2 * contract.compensation_x}, got {stake}"
        )
    ledger.transfer(collector, contract.contract_addr, stake, fee)
    contract.collector = collector
    contract.staked_collector = stake
    contract.state = EscrowState.LOCKED
    return contract


def confirm_data_valid(
    ledger: Ledger, contract: EscrowContract, caller: Address, fee: int
) -> EscrowContract:
    """Collector confirms receipt of valid data; the contract pays out 3X and X.

    The only way funds leave a locked contract. Pays 3X to the subject
    (stake back plus compensation) and X to the collector (stake back
    minus compensation), emptying the contract exactly.
    """
    if contract.state is not EscrowState.LOCKED:
        raise StateError(f"cannot confirm data from {contract.state.value}")
    if caller != contract.collector:
        raise AuthorizationError("only the collector may confirm the data")
    x = contract.compensation_x
    ledger.transfer(caller, contract.contract_addr, 0, fee)
    ledger.transfer(contract.contract_addr, contract.subject, 3 * x, 0)
    ledger.transfer(contract.contract_addr, contract.collector, x, 0)
    contract.state = EscrowState.COMPLETE
    return contract


def abort(ledger: Ledger, contract: EscrowContract, caller: Address, fee: int) -> EscrowContract:
    """Subject cancels before the collector has joined; the stake is refunded."""
    if contract.state is not EscrowState.CREATED:
        raise StateError(f"cannot abort from {contract.state.value}")
    if caller != contract.subject:
        raise AuthorizationError("only the subject may abort")
    ledger.transfer(caller, contract.contract_addr, 0, fee)
    ledger.transfer(contract.contract_addr, contract.subject, contract.staked_subject, 0)
    contract.state = EscrowState.ABORTED
    return contract


def contract_report(contract: EscrowContract) -> dict:
    """JSON-ready view of the contract for ledger dumps and session reports."""
    return {
        "contract_addr": contract.contract_addr.hex,
        "subject": contract.subject.hex,
        "collector": contract.collector.hex if contract.collector else None,
        "compensation_x": contract.compensation_x,
        "state": contract.state.value,
        "staked_subject": contract.staked_subject,
        "staked_collector": contract.staked_collector,
    }
