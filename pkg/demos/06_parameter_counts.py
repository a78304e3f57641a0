"""Compare trainable-parameter budgets: full fine-tuning vs adapters.

The closed forms are verified elsewhere against tensor enumeration; this
just prints the numbers for a ladder of model sizes so the savings are
easy to eyeball.
"""

from rsec.model import EncoderConfig, LoraConfig, full_param_count, lora_param_count

CONFIGS = [
    ("tiny", EncoderConfig(vocab_size=2_000, d=64, layers=2, heads=4, ff_dim=128, max_len=128)),
    ("small", EncoderConfig(vocab_size=8_000, d=128, layers=4, heads=8, ff_dim=512, max_len=256)),
    ("base-ish", EncoderConfig(vocab_size=30_522, d=768, layers=12, heads=12, ff_dim=3072, max_len=512)),
]

print(f"{'config':<10}{'full':>14}{'lora r=8':>14}{'updated':>10}")
for name, cfg in CONFIGS:
    full = full_param_count(cfg)
    lora = lora_param_count(cfg, LoraConfig(rank=8))
    print(f"{name:<10}{full:>14,}{lora:>14,}{lora / full:>9.2%}")

print()
print("rank sweep on the base-ish config:")
cfg = CONFIGS[-1][1]
for rank in (1, 2, 4, 8, 16, 32):
    lora = lora_param_count(cfg, LoraConfig(rank=rank))
    print(f"  r={rank:<3} -> {lora:>12,} trainable ({lora / full_param_count(cfg):.3%})")
