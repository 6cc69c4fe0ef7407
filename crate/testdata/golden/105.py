def count_items(elements):
    count = 0
    for _ in elements:
        count += 1
    return count
