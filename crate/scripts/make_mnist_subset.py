"""Write a balanced MNIST subset as IDX files.

Source: the `mnist` npm package (cazala/mnist), which ships 10000 original
MNIST digits as normalized floats in src/digits/<d>.json.

usage: python3 make_mnist_subset.py <digits_dir> <out_dir> [train_per_class] [test_per_class] [seed]
"""
import json
import random
import struct
import sys


def main():
    src, out = sys.argv[1], sys.argv[2]
    n_train = int(sys.argv[3]) if len(sys.argv) > 3 else 200
    n_test = int(sys.argv[4]) if len(sys.argv) > 4 else 50
    seed = int(sys.argv[5]) if len(sys.argv) > 5 else 20201
    rng = random.Random(seed)
    train, test = [], []
    for d in range(10):
        flat = json.load(open(f"{src}/{d}.json"))["data"]
        count = len(flat) // 784
        imgs = [flat[i * 784:(i + 1) * 784] for i in range(count)]
        picks = rng.sample(range(count), n_train + n_test)
        train += [(imgs[i], d) for i in picks[:n_train]]
        test += [(imgs[i], d) for i in picks[n_train:]]
    rng.shuffle(train)
    rng.shuffle(test)
    for name, items in (("train", train), ("test", test)):
        with open(f"{out}/mnist-{name}-images.idx3", "wb") as f:
            f.write(struct.pack(">IIII", 0x803, len(items), 28, 28))
            for img, _ in items:
                f.write(bytes(min(255, max(0, round(v * 255))) for v in img))
        with open(f"{out}/mnist-{name}-labels.idx1", "wb") as f:
            f.write(struct.pack(">II", 0x801, len(items)))
            f.write(bytes(lbl for _, lbl in items))


if __name__ == "__main__":
    main()
