def count_items(prices):
    count = 0
    for _ in prices:
        count += 1
    return count
