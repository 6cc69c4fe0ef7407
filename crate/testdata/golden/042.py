def restrict(score):
    if score < 0:
        return 0
    if score > 8:
        return 8
    return score
