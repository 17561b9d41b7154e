"""Walk through one honest session end to end and print what happened."""

from gazechain import (
    CollectorPolicy,
    SessionConfig,
    SubjectStrategy,
    eth_to_wei,
    run_session,
    wei_to_eth,
)

config = SessionConfig(
    compensation_x=eth_to_wei("0.025"),
    fee=eth_to_wei("0.0001"),
    seed=42,
    n_samples=1000,
)

outcome = run_session(config, SubjectStrategy.HONEST, CollectorPolicy.HONEST)

print("quality verdict :", outcome.quality.value)
print("contract state  :", outcome.contract_state.value)
print("verification    :", outcome.verification.value)
print("anchor tx       :", outcome.anchor_tx_hash.hex())
print()

print("block-by-block view of the exchange:")
for block in outcome.ledger.chain:
    for tx in block.transactions:
        kind = "self-anchor" if tx.sender == tx.recipient else "transfer"
        print(
            f"  block {block.index}: {kind:<11} {wei_to_eth(tx.value):>8} ETH"
            f"  fee {wei_to_eth(tx.fee)}"
            f"  input_data {len(tx.input_data)}B"
        )
print()

for name, addr in (("subject", outcome.subject), ("collector", outcome.collector)):
    balance = outcome.final_balances[addr]
    print(f"{name:<9} {addr.hex}  {wei_to_eth(balance)} ETH  (net {wei_to_eth(outcome.net(addr))})")

print()
print("chain verifies   :", outcome.ledger.verify_chain())
print("conservation     :", outcome.ledger.conservation_holds())
