def find_min(prices):
    return min(prices)
