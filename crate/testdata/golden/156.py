def slurp(sentence):
    with open(sentence) as handle:
        return handle.read()
