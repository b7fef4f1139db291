import itertools

import numpy as np
import pytest

from voxact.errors import InvalidInputError
from voxact.language import HashingLanguageEncoder
from voxact.toyworld import PALETTE_NAMES


class TestHashingLanguageEncoder:
    def test_reference_shape(self):
        enc = HashingLanguageEncoder()
        out = enc.encode("push the red button")
        assert out.shape == (77, 512)

    def test_deterministic(self):
        enc = HashingLanguageEncoder(16, 64)
        a = enc.encode("stack the azure block on the teal block")
        b = enc.encode("stack the azure block on the teal block")
        np.testing.assert_array_equal(a, b)
        # a fresh encoder instance agrees too
        c = HashingLanguageEncoder(16, 64).encode("stack the azure block on the teal block")
        np.testing.assert_array_equal(a, c)

    def test_case_and_whitespace_normalization(self):
        enc = HashingLanguageEncoder(8, 32)
        np.testing.assert_array_equal(
            enc.encode("Push The RED Button"), enc.encode("push  the   red button")
        )

    def test_one_word_difference_changes_encoding(self):
        enc = HashingLanguageEncoder(16, 64)
        a = enc.encode("push the red button")
        b = enc.encode("push the blue button")
        assert not np.array_equal(a, b)

    def test_toy_vocabulary_collision_free(self):
        # Exhaustive pairwise check over the toy-task vocabulary: distinct
        # words must embed distinctly, else goals could alias.
        vocab = set(PALETTE_NAMES) | {
            "push", "the", "button", "stack", "block", "on", "put", "cube",
            "in", "slot", "left", "middle", "right",
        }
        enc = HashingLanguageEncoder(4, 32)
        embeddings = {w: enc._token_embedding(w) for w in vocab}
        for a, b in itertools.combinations(sorted(vocab), 2):
            assert not np.array_equal(embeddings[a], embeddings[b]), (a, b)

    def test_padding_and_truncation(self):
        enc = HashingLanguageEncoder(3, 16)
        short = enc.encode("push")
        assert np.all(short[1:] == 0.0) and np.any(short[0] != 0.0)
        long = enc.encode("one two three four five")
        assert long.shape == (3, 16)
        np.testing.assert_array_equal(long[2], enc._token_embedding("three"))

    def test_empty_goal_rejected(self):
        enc = HashingLanguageEncoder(4, 8)
        with pytest.raises(InvalidInputError):
            enc.encode("")
        with pytest.raises(InvalidInputError):
            enc.encode("   ")
