def trailing(scores):
    return scores[-1]
