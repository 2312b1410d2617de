"""
Training the melody model and shaping its answers
=================================================

Trains the recurrent variational autoencoder on the built-in toy corpus
(a couple of minutes), then shows how the two partner controls shape its
responses: temperature widens the output distribution, similarity pulls
the response toward the input phrase.
"""

import numpy as np

from duet.genmodel import (BetaSchedule, ModelConfig, PartnerParams,
                           init_model, reconstruction_accuracy, respond,
                           save_checkpoint, train)
from duet.melody import normalized_edit_distance
from duet.toydata import toy_corpus

dataset = toy_corpus(300, seed=0)
print(f"toy corpus: {len(dataset.sequences)} unique 2-bar sequences")

state = init_model(ModelConfig(bars=2, seed=7))
# slow beta ramp: at this corpus size the default ramp collapses the latent
state.beta_schedule = BetaSchedule(ramp_steps=20000)
result = train(state, dataset, epochs=80, learning_rate=2e-3)
state = result.state

acc = reconstruction_accuracy(state, dataset.sequences[:100])
print(f"final loss {result.losses[-1]:.3f}, "
      f"greedy reconstruction accuracy {acc:.3f}")
save_checkpoint(state, "/tmp/demo_model.mvae")
print("checkpoint written to /tmp/demo_model.mvae")

rng = np.random.Generator(np.random.Philox(key=1))
prompt = dataset.sequences[0]
print(f"\nprompt: {prompt.codes}")

print("\nsimilarity sweep (temperature 1.0); distance is normalized edit")
for sim in (0.0, 0.3, 0.9, 1.0):
    params = PartnerParams(temperature=1.0, similarity=sim)
    dists = [normalized_edit_distance(
        seq.codes, respond(state, seq, params, rng).codes)
        for seq in dataset.sequences[:50]]
    print(f"  s={sim:3.1f}: mean distance {np.mean(dists):.3f}")

print("\ntemperature sweep (similarity 0.9); one response per setting")
for temp in (0.5, 1.0, 1.5):
    params = PartnerParams(temperature=temp, similarity=0.9)
    out = respond(state, prompt, params, rng)
    print(f"  T={temp:3.1f}: {out.codes}")
