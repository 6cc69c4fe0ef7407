def power(score):
    return score ** 4
