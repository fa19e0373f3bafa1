"""Generate the bundled Penn-tagged fixture used to train and check the tagger.

Sentences come from a small story-style grammar with a lexicon that contains
deliberately ambiguous words (walk NN/VB/VBP, that DT/IN, her PRP/PRP$, ...),
so the tagger has to use context. Output: token<TAB>TAG, blank line between
sentences. Deterministic for a fixed seed.
"""
import random
import sys

rng = random.Random(20170619)

NNP = ["John", "Mary", "Tom", "Kelly", "Sam", "Anna", "Jake", "Lucy", "Ben", "Gina", "Mike", "Sara", "Tim", "Amy"]
NN = ["dog", "cat", "car", "house", "game", "book", "job", "party", "school", "store", "cake", "phone",
      "walk", "test", "friend", "park", "ball", "trip", "lunch", "gift", "show", "plan", "play", "love", "work", "note"]
NNS = ["dogs", "friends", "books", "games", "cookies", "flowers", "shoes", "kids", "parents", "tickets", "plans", "walks", "notes"]
VBD = ["bought", "found", "loved", "wanted", "played", "walked", "baked", "lost", "took", "made", "saw", "liked",
       "visited", "cleaned", "fixed", "called", "watched", "finished", "opened", "hated"]
VBN = ["played", "walked", "finished", "cleaned", "fixed", "called", "lost", "made", "opened", "broken", "taken"]
VB = ["buy", "find", "play", "walk", "bake", "make", "see", "visit", "clean", "fix", "call", "watch", "finish", "open",
      "work", "love", "help", "go", "note"]
VBP = ["love", "play", "walk", "work", "like", "hate", "need", "want"]
VBZ = ["loves", "plays", "walks", "works", "likes", "hates", "needs", "wants"]
VBG = ["playing", "walking", "baking", "cleaning", "watching", "running", "reading", "working"]
JJ = ["happy", "new", "old", "big", "sad", "great", "nice", "small", "angry", "tired", "excited", "late", "good", "bad", "proud"]
RB = ["very", "really", "finally", "quickly", "always", "never", "soon", "back", "again", "home"]
RB_END = ["again", "home", "back", "quickly", "soon", "today"]
PRP_SUBJ = ["He", "She", "They", "We", "I"]
PRP_OBJ = ["him", "her", "them", "us", "it"]
PRPS = ["his", "her", "their", "my", "our"]
DT = ["the", "a", "that", "this", "every"]
IN = ["at", "in", "with", "for", "after", "to", "on", "from", "about"]
CC = ["and", "but"]
MD = ["would", "could", "will", "should"]


def c(lst):
    return rng.choice(lst)


def np_():
    r = rng.random()
    if r < 0.35:
        return [(c(DT), "DT"), (c(NN), "NN")]
    if r < 0.55:
        return [(c(DT), "DT"), (c(JJ), "JJ"), (c(NN), "NN")]
    if r < 0.75:
        return [(c(PRPS), "PRP$"), (c(NN), "NN")]
    if r < 0.9:
        return [(c(NNS), "NNS")]
    return [(c(PRPS), "PRP$"), (c(JJ), "JJ"), (c(NNS), "NNS")]


def subj():
    r = rng.random()
    if r < 0.45:
        return [(c(NNP), "NNP")]
    if r < 0.85:
        return [(c(PRP_SUBJ), "PRP")]
    w = np_()
    w[0] = (w[0][0].capitalize(), w[0][1])
    return w


def pp():
    return [(c(IN), "IN")] + np_()


def end():
    return [(".", ".")] if rng.random() < 0.85 else [("!", ".")]


TEMPLATES = [
    lambda: subj() + [(c(VBD), "VBD")] + np_() + end(),
    lambda: subj() + [(c(VBD), "VBD"), ("to", "TO"), (c(VB), "VB")] + np_() + end(),
    lambda: subj() + [(c(VBD), "VBD")] + np_() + pp() + end(),
    lambda: subj() + [("was", "VBD"), (c(RB[:2]), "RB"), (c(JJ), "JJ")] + end(),
    lambda: subj() + [("was", "VBD"), (c(JJ), "JJ"), ("that", "IN")] + [(c(PRP_OBJ[:3]).replace("him", "he").replace("her", "she").replace("them", "they"), "PRP"), (c(VBD), "VBD")] + np_() + end(),
    lambda: subj() + [(c(VBD), "VBD"), (c(RB_END), "RB")] + end(),
    lambda: subj() + [(c(MD), "MD"), (c(VB), "VB")] + np_() + [(c(RB_END), "RB")] + end(),
    lambda: subj() + [("had", "VBD"), (c(VBN), "VBN")] + np_() + end(),
    lambda: subj() + [("was", "VBD"), (c(VBG), "VBG")] + pp() + end(),
    lambda: subj() + [(c(VBD), "VBD"), (c(PRP_OBJ), "PRP"), ("for", "IN"), ("a", "DT"), (c(["walk", "ride", "drink", "swim"]), "NN")] + end(),
    lambda: [("The", "DT"), (c(NN), "NN"), (c(VBZ), "VBZ")] + np_() + end(),
    lambda: [(c(PRP_SUBJ[2:]), "PRP"), (c(VBP), "VBP")] + np_() + end(),
    lambda: subj() + [(c(VBD), "VBD")] + np_() + [(c(CC), "CC")] + [(c(VBD), "VBD")] + np_() + end(),
    lambda: [(c(NNP), "NNP"), ("and", "CC"), (c(NNP), "NNP"), (c(VBD), "VBD"), ("to", "TO"), ("the", "DT"), (c(NN), "NN")] + end(),
    lambda: subj() + [(c(VBD), "VBD"), ("it", "PRP"), (c(RB[:6]), "RB")] + end(),
    lambda: [("After", "IN")] + np_() + [(",", ",")] + subj() + [(c(VBD), "VBD"), (c(RB_END), "RB")] + end(),
    lambda: subj() + [("did", "VBD"), ("n't", "RB"), (c(VB), "VB")] + np_() + end(),
    lambda: subj() + [("'s", "VBZ"), (c(JJ), "JJ"), ("now", "RB")] + end(),
]


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 900
    out = []
    for _ in range(n):
        sent = c(TEMPLATES)()
        out.append("\n".join(f"{w}\t{t}" for w, t in sent))
    sys.stdout.write("\n\n".join(out) + "\n")


if __name__ == "__main__":
    main()
