"""Dataclass configs: model dimensions, training constants, reward scheme."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

MAX_TURNS = 15


@dataclass
class RewardConfig:
    """End-of-dialogue feedback: +15 on success, 0 on failure, -1 per turn."""

    success_reward: float = 15.0
    failure_reward: float = 0.0
    step_penalty: float = -1.0

    def episode_total(self, success: bool, turns: int) -> float:
        base = self.success_reward if success else self.failure_reward
        return base + self.step_penalty * turns


@dataclass
class Hyperparameters:
    """All tunables in one place; defaults follow the reported training setup."""

    # model dimensions
    utterance_hidden: int = 150      # utterance-level (bidirectional) LSTM size
    dialogue_hidden: int = 200       # dialogue-level LSTM size
    policy_hidden: int = 100
    tracker_hidden: int = 100        # per-slot MLP hidden size (unreported; see notes)
    embedding_dim: int = 300

    # supervised stage
    learning_rate: float = 1e-3
    dropout_rate: float = 0.5
    batch_size: int = 32
    epochs: int = 30
    patience: int = 5                # early stop on dev joint accuracy
    slot_loss_weight: float = 1.0    # interpolation weight, shared by every slot
    action_loss_weight: float = 1.0
    slot_loss_weights: tuple[float, ...] | None = None  # optional per-slot override
    grad_clip_norm: float = 5.0
    min_count: int = 1               # vocabulary frequency threshold

    # reinforcement stage
    rl_episodes: int = 6000
    rl_learning_rate: float = 3e-4
    rl_total_return: bool = False    # True: replace reward-to-go R_k with the episode total
    rl_baseline: bool = False        # subtract a turn-indexed moving-average baseline
    rl_baseline_decay: float = 0.95
    eval_interval: int = 200         # episodes between interactive evaluations
    eval_episodes: int = 500         # greedy episodes per evaluation point

    # environment
    max_turns: int = MAX_TURNS
    p_extra: float = 0.3             # chance the user volunteers an extra slot
    unsat_fraction: float = 0.1      # corpus goals drawn in "any" (maybe unsatisfiable) mode
    seed: int = 13

    reward: RewardConfig = field(default_factory=RewardConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Hyperparameters":
        data = dict(data)
        reward = data.pop("reward", None)
        known = {f.name for f in fields(cls)}
        hyper = cls(**{k: v for k, v in data.items() if k in known and k != "reward"})
        if reward is not None:
            hyper.reward = RewardConfig(**reward)
        if hyper.slot_loss_weights is not None:
            hyper.slot_loss_weights = tuple(hyper.slot_loss_weights)
        return hyper

    def slot_weight(self, slot_index: int) -> float:
        if self.slot_loss_weights is not None:
            return self.slot_loss_weights[slot_index]
        return self.slot_loss_weight
