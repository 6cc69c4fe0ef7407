def sort_values(arr):
    arr.sort()
    return arr
