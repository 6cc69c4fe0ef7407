def how_many(nums):
    return len(nums)
