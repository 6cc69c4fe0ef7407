def empty(prices):
    return len(prices) == 0
