def remove_duplicates(arr):
    return list(set(arr))
