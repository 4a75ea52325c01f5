#!/usr/bin/env python3
"""Distillation mathematics demonstrated end to end at desk scale.

Two clients hold disjoint halves of a 4-class Gaussian-blob problem.  A
teacher is trained federated (full-batch gradients, size-weighted
aggregation), then client 0 trains three students on its 2-class shard:

  hard      plain cross-entropy on its own labels
  kd        cross-entropy plus temperature-softened teacher matching
  simkd     feature regression onto the teacher plus classifier reuse

Only the feature-matching student inherits the teacher's knowledge of
the classes the client never saw.
"""

import numpy as np

from fedkd import kd

seed = 0
spec = kd.BlobSpec(seed=seed)
train_set, test_set = kd.make_train_test(spec, train_per_class=60, test_per_class=60)
groups = [(0, 1), (2, 3)]
parts = kd.split_by_label(train_set, groups)
print(f"dataset: {spec.num_classes} classes, {spec.num_features} features, "
      f"{len(train_set)} train / {len(test_set)} test samples")
print(f"client shards: labels {groups[0]} ({len(parts[0])} samples), "
      f"labels {groups[1]} ({len(parts[1])} samples)")

teacher = kd.train_teacher(parts, epochs=600, lr=0.5, arch=kd.NetArch((32,), 16),
                           seed=seed)
print(f"\nfederated teacher accuracy on the full test set: "
      f"{kd.measure_accuracy(teacher, test_set):.3f}")

private = parts[0]
own_test = test_set.restrict_labels(groups[0])
arch = kd.NetArch((32,), 8)

students = {}
students["hard"] = (kd.train_teacher([private], epochs=600, lr=0.5, arch=arch,
                                     seed=seed + 1), None)
students["kd"] = (kd.distill_student(teacher, arch, private,
                                     kd.LossSpec("kd", temperature=4.0),
                                     epochs=600, lr=0.5, seed=seed + 1)[0], None)
sim, proj = kd.distill_student(teacher, arch, private, kd.LossSpec("simkd"),
                               epochs=600, lr=0.1, seed=seed + 1)
students["simkd"] = (sim, (teacher, proj))

print(f"\n{'student':<8} {'own 2-class test':>18} {'full 4-class test':>19}")
for name, (params, override) in students.items():
    own = kd.measure_accuracy(params, own_test, override)
    full = kd.measure_accuracy(params, test_set, override)
    print(f"{name:<8} {own:>18.3f} {full:>19.3f}")
print("\n(hard labels alone cap the student near 0.5 on the full set: half the")
print(" classes were never in its data; reusing the teacher's classifier on")
print(" projected features recovers most of them)")

print("\nsanity: one federated round equals the centralized gradient step")
p0 = kd.init_net(kd.NetArch((8,), 4), spec.num_features, spec.num_classes,
                 np.random.Generator(np.random.PCG64(7)))
merged = kd.fedsgd_round(p0.copy(), parts, kd.LossSpec("hard"), lr=0.3)
union = kd.ToyDataset(np.concatenate([p.inputs for p in parts]),
                      np.concatenate([p.labels for p in parts]), spec.num_classes)
central = kd.fedsgd_round(p0.copy(), [union], kd.LossSpec("hard"), lr=0.3)
gap = max(np.abs(a - b).max() for a, b in zip(merged.arrays(), central.arrays()))
print(f"  max parameter difference after one round: {gap:.2e}")
