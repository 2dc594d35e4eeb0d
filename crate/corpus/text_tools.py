import re
from collections import Counter


WORD = re.compile(r"[A-Za-z']+")


def words(text):
    return [w.lower() for w in WORD.findall(text)]


def word_counts(text):
    return Counter(words(text))


def top_words(text, n):
    counts = word_counts(text)
    return [word for word, _ in counts.most_common(n)]


def wrap(text, width):
    lines = []
    current = []
    length = 0
    for word in text.split():
        if length + len(word) + len(current) > width and current:
            lines.append(" ".join(current))
            current = []
            length = 0
        current.append(word)
        length += len(word)
    if current:
        lines.append(" ".join(current))
    return lines


def is_palindrome(text):
    cleaned = [c.lower() for c in text if c.isalnum()]
    return cleaned == cleaned[::-1]


def caesar(text, shift):
    out = []
    for c in text:
        if c.isalpha():
            base = ord("a") if c.islower() else ord("A")
            out.append(chr((ord(c) - base + shift) % 26 + base))
        else:
            out.append(c)
    return "".join(out)


class Tokenizer:
    def __init__(self, lowercase=True):
        self.lowercase = lowercase
        self.vocab = {}

    def fit(self, texts):
        for text in texts:
            for word in self.tokenize(text):
                if word not in self.vocab:
                    self.vocab[word] = len(self.vocab)

    def tokenize(self, text):
        if self.lowercase:
            text = text.lower()
        return WORD.findall(text)

    def encode(self, text):
        return [self.vocab[w] for w in self.tokenize(text) if w in self.vocab]
