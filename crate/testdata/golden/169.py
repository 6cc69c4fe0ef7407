def check_factor(score):
    return score % 14 == 0
