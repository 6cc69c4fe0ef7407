def total(nums):
    total = 0
    for item in nums:
        total += item
    return total
