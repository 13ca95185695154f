"""End-to-end trainable task-oriented dialogue agent.

Neural dialogue state tracking over a recurrent state, symbolic knowledge-base
queries, a softmax action policy, template NLG, a rule-based user simulator,
and hybrid supervised + REINFORCE training.
"""

__version__ = "0.1.0"
